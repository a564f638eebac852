#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/ports.hpp"
#include "regard/prompt.hpp"
#include "regard/runner.hpp"

namespace regard {

enum class Scope { all_prompts, paraphrased_only, original_only };

std::string_view to_string(Scope scope);
Scope parse_scope(std::string_view text);
bool in_scope(const PromptKey& key, Scope scope);

// Integer label tallies. Every statistic derived from them is exact with
// respect to record order.
struct LabelCounts {
  std::int64_t positive = 0;
  std::int64_t negative = 0;
  std::int64_t neutral = 0;

  void add(RegardLabel label);
  LabelCounts& operator+=(const LabelCounts& other);
  std::int64_t n() const { return positive + negative + neutral; }
  std::int64_t score_sum() const { return positive - negative; }
  double mean() const;
  // Sample (n - 1) standard deviation of the {+1, 0, -1} scores; 0 when n < 2.
  double sample_std() const;
  Categorical dist() const;
};

struct GroupStats {
  std::string group_id;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  Categorical dist;

  bool operator==(const GroupStats&) const = default;
};

// Pooled group id used for the all-groups column.
inline constexpr std::string_view kAllGroups = "all";

// Mean, sample std and label distribution of one group's records within
// `scope`. group_id "all" pools every group. Throws DataError on an empty slice.
GroupStats group_stats(std::span<const ScoredRecord> records, std::string_view group_id, Scope scope);

// Mean over paraphrased prompts (every verb phrase, structure and seed).
double score_general(std::span<const ScoredRecord> records, std::string_view group_id);

struct GapReport {
  Axis axis = Axis::gender;
  std::string advantaged;
  std::string disadvantaged;
  double advantaged_mean = 0.0;
  double disadvantaged_mean = 0.0;
  double gap = 0.0;  // advantaged_mean - disadvantaged_mean

  bool operator==(const GapReport&) const = default;
};

GapReport make_gap(Axis axis, std::string advantaged, double advantaged_mean,
                   std::string disadvantaged, double disadvantaged_mean);

GapReport pairwise_gap(std::span<const ScoredRecord> records,
                       const std::vector<DemographicGroup>& groups, Axis axis,
                       Scope scope = Scope::paraphrased_only);

inline constexpr double kDefaultKlEpsilon = 1e-6;

// sum_i p'_i ln(p'_i / q'_i) where p' and q' are p and q with epsilon added
// to every component and renormalized. Throws ConfigError on an invalid
// distribution or epsilon <= 0.
double kl_divergence(const Categorical& p, const Categorical& q, double epsilon = kDefaultKlEpsilon);

struct KLMatrix {
  std::vector<std::string> groups;
  std::vector<std::vector<double>> values;  // values[row][col] = KL(row || col)

  double at(std::string_view row, std::string_view col) const;
  bool operator==(const KLMatrix&) const = default;
};

// Full grid over `order`. Throws ConfigError when a group in `order` has no
// distribution.
KLMatrix kl_matrix(const std::vector<std::string>& order,
                   const std::map<std::string, Categorical>& dists,
                   double epsilon = kDefaultKlEpsilon);

// Mean regard per (structure, group); originals excluded. Rows are sorted by
// structure id. An empty cell has n == 0 and mean NaN.
class StructureGroupMatrix {
 public:
  struct Cell {
    double mean = 0.0;
    std::size_t n = 0;
    bool operator==(const Cell&) const = default;
  };

  StructureGroupMatrix() = default;
  StructureGroupMatrix(std::vector<int> structure_ids, std::vector<std::string> group_ids);

  // Rows are given by their means, each cell with weight n_per_cell.
  static StructureGroupMatrix from_means(std::vector<int> structure_ids,
                                         std::vector<std::string> group_ids,
                                         const std::vector<std::vector<double>>& means,
                                         std::size_t n_per_cell = 1);

  const std::vector<int>& structure_ids() const { return structure_ids_; }
  const std::vector<std::string>& group_ids() const { return group_ids_; }
  std::size_t rows() const { return structure_ids_.size(); }
  std::size_t cols() const { return group_ids_.size(); }

  const Cell& cell(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
  Cell& cell(std::size_t row, std::size_t col) { return cells_[row * cols() + col]; }
  std::size_t col_index(std::string_view group_id) const;

  // (structure id, group id) of every empty cell.
  std::vector<std::pair<int, std::string>> empty_cells() const;

  bool operator==(const StructureGroupMatrix&) const = default;

 private:
  std::vector<int> structure_ids_;
  std::vector<std::string> group_ids_;
  std::vector<Cell> cells_;
};

StructureGroupMatrix per_structure_means(std::span<const ScoredRecord> records,
                                         const std::vector<std::string>& group_order);

struct GroupSelection {
  std::string group_id;
  std::vector<int> best;   // k highest means, best first
  std::vector<int> worst;  // k lowest means, worst first
  bool operator==(const GroupSelection&) const = default;
};

struct TopBottom {
  std::size_t k = 0;
  std::vector<GroupSelection> per_group;
  std::vector<int> best_intersection;   // ascending ids
  std::vector<int> worst_intersection;
  std::vector<int> best_union;
  std::vector<int> worst_union;
  // Per group (plus "all"), n-weighted mean over the union rows.
  std::vector<std::pair<std::string, double>> best_union_means;
  std::vector<std::pair<std::string, double>> worst_union_means;

  bool operator==(const TopBottom&) const = default;
};

// Ties break by ascending structure id. Empty cells are not ranked. Throws
// ConfigError when k exceeds the row count.
TopBottom top_bottom_structures(const StructureGroupMatrix& matrix, std::size_t k);

struct StructureGaps {
  Axis axis = Axis::gender;
  std::vector<std::pair<int, double>> gaps;  // every ranked structure, id order
  std::vector<std::pair<int, double>> best;  // k most negative gaps
  std::vector<std::pair<int, double>> worst;  // k most positive gaps
  double best_mean = 0.0;
  double worst_mean = 0.0;

  bool operator==(const StructureGaps&) const = default;
};

StructureGaps per_structure_gaps(const StructureGroupMatrix& matrix,
                                 const std::vector<DemographicGroup>& groups, Axis axis,
                                 std::size_t k);

// u.v / (|u||v|). Throws ConfigError on a dimension mismatch or zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct RobustnessOptions {
  std::size_t sample_n = 10;
  std::size_t n_splits = 10;
  std::uint64_t rng_seed = 0;
  bool include_original = false;  // treat the unparaphrased prompt as one more structure
};

struct FixedRobustness {
  double value = 0.0;
  std::vector<int> sampled;
  std::size_t pairs = 0;
};

struct SplitRobustness {
  double value = 0.0;
  std::vector<double> per_split;
};

struct RobustnessReport {
  double fixed_structure_similarity = 0.0;
  double split_half_similarity = 0.0;
  std::size_t sample_n = 0;
  std::size_t n_splits = 0;
  std::size_t structures_available = 0;
  std::uint64_t rng_seed = 0;
  bool include_original = false;
  std::vector<int> sampled_structures;
  std::vector<double> split_similarities;

  bool operator==(const RobustnessReport&) const = default;
};

// Mean pairwise cosine between the group-mean vectors of sample_n structures
// drawn without replacement. Structures missing any group are not eligible.
FixedRobustness robustness_fixed(std::span<const ScoredRecord> records,
                                 const std::vector<std::string>& group_order,
                                 const RobustnessOptions& options);

// Mean over n_splits random halvings of the structures of the cosine between
// the two halves' group-mean vectors. Odd counts put the extra structure in
// the second half.
SplitRobustness robustness_split(std::span<const ScoredRecord> records,
                                 const std::vector<std::string>& group_order,
                                 const RobustnessOptions& options);

RobustnessReport robustness(std::span<const ScoredRecord> records,
                            const std::vector<std::string>& group_order,
                            const RobustnessOptions& options);

// Fleiss' kappa over an items x categories table of rating counts. Every row
// must sum to the same rater count n >= 2. When all ratings fall in one
// category kappa is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

// Per-annotator fraction of `true`, averaged over annotators.
double judgment_accuracy(const std::vector<std::vector<bool>>& judgments_per_annotator);

// ---------------------------------------------------------------------------
// Full analysis document
// ---------------------------------------------------------------------------

struct AnalysisOptions {
  std::size_t k = 5;
  double kl_epsilon = kDefaultKlEpsilon;
};

struct AnalysisResult {
  std::vector<std::string> group_order;  // excludes "all"
  // scope -> per group stats, "all" first.
  std::map<std::string, std::vector<GroupStats>> group_stats;
  std::vector<std::pair<std::string, double>> score_general;
  std::map<std::string, std::vector<GapReport>> pairwise_gap;  // scope -> per axis
  KLMatrix kl_matrix;                                        // paraphrased distributions
  StructureGroupMatrix per_structure_means;
  TopBottom top_bottom;
  std::vector<StructureGaps> per_structure_gaps;

  bool operator==(const AnalysisResult&) const = default;
};

AnalysisResult analyze(std::span<const ScoredRecord> records,
                       const std::vector<DemographicGroup>& groups,
                       const AnalysisOptions& options = {});

void to_json(nlohmann::json& j, const GroupStats& v);
void from_json(const nlohmann::json& j, GroupStats& v);
void to_json(nlohmann::json& j, const GapReport& v);
void from_json(const nlohmann::json& j, GapReport& v);
void to_json(nlohmann::json& j, const KLMatrix& v);
void from_json(const nlohmann::json& j, KLMatrix& v);
void to_json(nlohmann::json& j, const StructureGroupMatrix& v);
void from_json(const nlohmann::json& j, StructureGroupMatrix& v);
void to_json(nlohmann::json& j, const TopBottom& v);
void from_json(const nlohmann::json& j, TopBottom& v);
void to_json(nlohmann::json& j, const StructureGaps& v);
void from_json(const nlohmann::json& j, StructureGaps& v);
void to_json(nlohmann::json& j, const RobustnessReport& v);
void from_json(const nlohmann::json& j, RobustnessReport& v);
void to_json(nlohmann::json& j, const AnalysisResult& v);
void from_json(const nlohmann::json& j, AnalysisResult& v);

}  // namespace regard
