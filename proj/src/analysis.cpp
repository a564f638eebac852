#include "regard/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "regard/error.hpp"
#include "regard/random.hpp"

namespace regard {

std::string_view to_string(Scope scope) {
  switch (scope) {
    case Scope::all_prompts: return "all_prompts";
    case Scope::paraphrased_only: return "paraphrased_only";
    case Scope::original_only: return "original_only";
  }
  return "?";
}

Scope parse_scope(std::string_view text) {
  if (text == "all_prompts") return Scope::all_prompts;
  if (text == "paraphrased_only") return Scope::paraphrased_only;
  if (text == "original_only") return Scope::original_only;
  throw ConfigError("unknown scope '" + std::string(text) + "'");
}

bool in_scope(const PromptKey& key, Scope scope) {
  switch (scope) {
    case Scope::all_prompts: return true;
    case Scope::paraphrased_only: return !key.is_original();
    case Scope::original_only: return key.is_original();
  }
  return false;
}

// ---------------------------------------------------------------------------

void LabelCounts::add(RegardLabel label) {
  switch (label) {
    case RegardLabel::positive: ++positive; break;
    case RegardLabel::negative: ++negative; break;
    case RegardLabel::neutral: ++neutral; break;
  }
}

LabelCounts& LabelCounts::operator+=(const LabelCounts& other) {
  positive += other.positive;
  negative += other.negative;
  neutral += other.neutral;
  return *this;
}

double LabelCounts::mean() const {
  if (n() == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(score_sum()) / static_cast<double>(n());
}

double LabelCounts::sample_std() const {
  const std::int64_t count = n();
  if (count < 2) return 0.0;
  // sum (x - mean)^2 = sumsq - sum^2 / n, with sumsq = pos + neg for x in {-1, 0, 1}
  const double sum = static_cast<double>(score_sum());
  const double sumsq = static_cast<double>(positive + negative);
  const double ss = sumsq - sum * sum / static_cast<double>(count);
  return std::sqrt(std::max(0.0, ss) / static_cast<double>(count - 1));
}

Categorical LabelCounts::dist() const {
  const double total = static_cast<double>(n());
  if (total == 0) return {};
  return {static_cast<double>(positive) / total, static_cast<double>(negative) / total,
          static_cast<double>(neutral) / total};
}

namespace {

LabelCounts tally(std::span<const ScoredRecord> records, std::string_view group_id, Scope scope) {
  LabelCounts c;
  const bool pooled = group_id == kAllGroups;
  for (const auto& r : records)
    if ((pooled || r.key.group_id == group_id) && in_scope(r.key, scope)) c.add(r.label);
  return c;
}

GroupStats stats_from(std::string group_id, const LabelCounts& c) {
  return {std::move(group_id), static_cast<std::size_t>(c.n()), c.mean(), c.sample_std(), c.dist()};
}

}  // namespace

GroupStats group_stats(std::span<const ScoredRecord> records, std::string_view group_id, Scope scope) {
  const LabelCounts c = tally(records, group_id, scope);
  if (c.n() == 0)
    throw DataError("no records for group '" + std::string(group_id) + "' in scope " +
                    std::string(to_string(scope)));
  return stats_from(std::string(group_id), c);
}

double score_general(std::span<const ScoredRecord> records, std::string_view group_id) {
  return group_stats(records, group_id, Scope::paraphrased_only).mean;
}

// ---------------------------------------------------------------------------

GapReport make_gap(Axis axis, std::string advantaged, double advantaged_mean,
                   std::string disadvantaged, double disadvantaged_mean) {
  return {axis,           std::move(advantaged), std::move(disadvantaged), advantaged_mean,
          disadvantaged_mean, advantaged_mean - disadvantaged_mean};
}

GapReport pairwise_gap(std::span<const ScoredRecord> records,
                       const std::vector<DemographicGroup>& groups, Axis axis, Scope scope) {
  const auto [adv, dis] = axis_pair(groups, axis);
  return make_gap(axis, adv->id, group_stats(records, adv->id, scope).mean, dis->id,
                  group_stats(records, dis->id, scope).mean);
}

// ---------------------------------------------------------------------------

double kl_divergence(const Categorical& p, const Categorical& q, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("KL epsilon must be positive");
  p.validate(1e-6);
  q.validate(1e-6);
  const auto pa = p.as_array();
  const auto qa = q.as_array();
  const double p_total = 1.0 + 3.0 * epsilon;
  const double q_total = 1.0 + 3.0 * epsilon;
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double ps = (pa[i] + epsilon) / p_total;
    const double qs = (qa[i] + epsilon) / q_total;
    sum += ps * std::log(ps / qs);
  }
  // identical inputs give exactly zero above; clamp float noise otherwise
  return std::max(0.0, sum);
}

double KLMatrix::at(std::string_view row, std::string_view col) const {
  const auto idx = [&](std::string_view id) {
    const auto it = std::find(groups.begin(), groups.end(), id);
    if (it == groups.end()) throw ConfigError("KL matrix has no group '" + std::string(id) + "'");
    return static_cast<std::size_t>(it - groups.begin());
  };
  return values[idx(row)][idx(col)];
}

KLMatrix kl_matrix(const std::vector<std::string>& order,
                   const std::map<std::string, Categorical>& dists, double epsilon) {
  KLMatrix m;
  m.groups = order;
  std::vector<const Categorical*> ds;
  for (const auto& g : order) {
    const auto it = dists.find(g);
    if (it == dists.end()) throw ConfigError("KL matrix: no distribution for group '" + g + "'");
    ds.push_back(&it->second);
  }
  m.values.assign(order.size(), std::vector<double>(order.size(), 0.0));
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < order.size(); ++j)
      if (i != j) m.values[i][j] = kl_divergence(*ds[i], *ds[j], epsilon);
  return m;
}

// ---------------------------------------------------------------------------

StructureGroupMatrix::StructureGroupMatrix(std::vector<int> structure_ids,
                                           std::vector<std::string> group_ids)
    : structure_ids_(std::move(structure_ids)), group_ids_(std::move(group_ids)) {
  cells_.assign(rows() * cols(), Cell{std::numeric_limits<double>::quiet_NaN(), 0});
}

StructureGroupMatrix StructureGroupMatrix::from_means(std::vector<int> structure_ids,
                                                      std::vector<std::string> group_ids,
                                                      const std::vector<std::vector<double>>& means,
                                                      std::size_t n_per_cell) {
  StructureGroupMatrix m(std::move(structure_ids), std::move(group_ids));
  if (means.size() != m.rows()) throw ConfigError("matrix row count mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (means[r].size() != m.cols()) throw ConfigError("matrix column count mismatch");
    for (std::size_t c = 0; c < m.cols(); ++c) m.cell(r, c) = {means[r][c], n_per_cell};
  }
  return m;
}

std::size_t StructureGroupMatrix::col_index(std::string_view group_id) const {
  const auto it = std::find(group_ids_.begin(), group_ids_.end(), group_id);
  if (it == group_ids_.end())
    throw ConfigError("structure matrix has no group '" + std::string(group_id) + "'");
  return static_cast<std::size_t>(it - group_ids_.begin());
}

std::vector<std::pair<int, std::string>> StructureGroupMatrix::empty_cells() const {
  std::vector<std::pair<int, std::string>> out;
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c)
      if (cell(r, c).n == 0) out.emplace_back(structure_ids_[r], group_ids_[c]);
  return out;
}

namespace {

// structure id -> per-group tallies in group_order
std::map<int, std::vector<LabelCounts>> tally_by_structure(std::span<const ScoredRecord> records,
                                                           const std::vector<std::string>& group_order,
                                                           bool include_original) {
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < group_order.size(); ++i) col.emplace(group_order[i], i);
  std::map<int, std::vector<LabelCounts>> out;
  for (const auto& r : records) {
    if (r.key.is_original() && !include_original) continue;
    const auto it = col.find(r.key.group_id);
    if (it == col.end()) continue;
    auto& row = out[r.key.structure_id];
    if (row.empty()) row.resize(group_order.size());
    row[it->second].add(r.label);
  }
  return out;
}

}  // namespace

StructureGroupMatrix per_structure_means(std::span<const ScoredRecord> records,
                                         const std::vector<std::string>& group_order) {
  const auto tallies = tally_by_structure(records, group_order, false);
  std::vector<int> ids;
  for (const auto& [id, _] : tallies) ids.push_back(id);
  StructureGroupMatrix m(ids, group_order);
  std::size_t r = 0;
  for (const auto& [id, row] : tallies) {
    for (std::size_t c = 0; c < row.size(); ++c)
      m.cell(r, c) = {row[c].mean(), static_cast<std::size_t>(row[c].n())};
    ++r;
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

// Picks the first k of (value, id) pairs under "higher value first" or
// "lower value first", ties by ascending id.
std::vector<std::pair<int, double>> select_extremes(std::vector<std::pair<int, double>> items,
                                                    std::size_t k, bool highest) {
  const auto better = [highest](const std::pair<int, double>& a, const std::pair<int, double>& b) {
    if (a.second != b.second) return highest ? a.second > b.second : a.second < b.second;
    return a.first < b.first;
  };
  const std::size_t take = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(take), items.end(), better);
  items.resize(take);
  return items;
}

std::vector<int> ids_of(const std::vector<std::pair<int, double>>& items) {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& [id, _] : items) out.push_back(id);
  return out;
}

double weighted_union_mean(const StructureGroupMatrix& m, const std::set<int>& rows_wanted,
                           std::optional<std::size_t> col) {
  double sum = 0.0;
  double weight = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (rows_wanted.count(m.structure_ids()[r]) == 0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (col && c != *col) continue;
      const auto& cell = m.cell(r, c);
      if (cell.n == 0) continue;
      sum += cell.mean * static_cast<double>(cell.n);
      weight += static_cast<double>(cell.n);
    }
  }
  return weight > 0 ? sum / weight : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TopBottom top_bottom_structures(const StructureGroupMatrix& matrix, std::size_t k) {
  if (k > matrix.rows())
    throw ConfigError("k=" + std::to_string(k) + " exceeds the " + std::to_string(matrix.rows()) +
                      " structures in the matrix");
  TopBottom out;
  out.k = k;
  std::set<int> best_union;
  std::set<int> worst_union;
  std::optional<std::set<int>> best_inter;
  std::optional<std::set<int>> worst_inter;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    std::vector<std::pair<int, double>> column;
    for (std::size_t r = 0; r < matrix.rows(); ++r)
      if (matrix.cell(r, c).n > 0) column.emplace_back(matrix.structure_ids()[r], matrix.cell(r, c).mean);
    GroupSelection sel{matrix.group_ids()[c], ids_of(select_extremes(column, k, true)),
                       ids_of(select_extremes(column, k, false))};
    const std::set<int> b(sel.best.begin(), sel.best.end());
    const std::set<int> w(sel.worst.begin(), sel.worst.end());
    best_union.insert(b.begin(), b.end());
    worst_union.insert(w.begin(), w.end());
    const auto intersect = [](std::optional<std::set<int>>& acc, const std::set<int>& s) {
      if (!acc) {
        acc = s;
        return;
      }
      std::set<int> next;
      std::set_intersection(acc->begin(), acc->end(), s.begin(), s.end(),
                            std::inserter(next, next.begin()));
      acc = std::move(next);
    };
    intersect(best_inter, b);
    intersect(worst_inter, w);
    out.per_group.push_back(std::move(sel));
  }
  if (best_inter) out.best_intersection.assign(best_inter->begin(), best_inter->end());
  if (worst_inter) out.worst_intersection.assign(worst_inter->begin(), worst_inter->end());
  out.best_union.assign(best_union.begin(), best_union.end());
  out.worst_union.assign(worst_union.begin(), worst_union.end());

  out.best_union_means.emplace_back(std::string(kAllGroups),
                                    weighted_union_mean(matrix, best_union, std::nullopt));
  out.worst_union_means.emplace_back(std::string(kAllGroups),
                                     weighted_union_mean(matrix, worst_union, std::nullopt));
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    out.best_union_means.emplace_back(matrix.group_ids()[c], weighted_union_mean(matrix, best_union, c));
    out.worst_union_means.emplace_back(matrix.group_ids()[c], weighted_union_mean(matrix, worst_union, c));
  }
  return out;
}

StructureGaps per_structure_gaps(const StructureGroupMatrix& matrix,
                                 const std::vector<DemographicGroup>& groups, Axis axis,
                                 std::size_t k) {
  if (k > matrix.rows())
    throw ConfigError("k=" + std::to_string(k) + " exceeds the " + std::to_string(matrix.rows()) +
                      " structures in the matrix");
  const auto [adv, dis] = axis_pair(groups, axis);
  const std::size_t ca = matrix.col_index(adv->id);
  const std::size_t cd = matrix.col_index(dis->id);
  StructureGaps out;
  out.axis = axis;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto& a = matrix.cell(r, ca);
    const auto& d = matrix.cell(r, cd);
    if (a.n == 0 || d.n == 0) continue;
    out.gaps.emplace_back(matrix.structure_ids()[r], a.mean - d.mean);
  }
  out.best = select_extremes(out.gaps, k, false);
  out.worst = select_extremes(out.gaps, k, true);
  const auto avg = [](const std::vector<std::pair<int, double>>& xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const auto& [_, g] : xs) s += g;
    return s / static_cast<double>(xs.size());
  };
  out.best_mean = avg(out.best);
  out.worst_mean = avg(out.worst);
  return out;
}

// ---------------------------------------------------------------------------

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ConfigError("cosine similarity needs equal dimensions (" + std::to_string(u.size()) +
                      " vs " + std::to_string(v.size()) + ")");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ConfigError("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

namespace {

struct EligibleRows {
  std::vector<int> ids;
  std::vector<std::vector<LabelCounts>> rows;
};

EligibleRows eligible_rows(std::span<const ScoredRecord> records,
                           const std::vector<std::string>& group_order, bool include_original) {
  EligibleRows out;
  for (auto& [id, row] : tally_by_structure(records, group_order, include_original)) {
    if (std::all_of(row.begin(), row.end(), [](const LabelCounts& c) { return c.n() > 0; })) {
      out.ids.push_back(id);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<double> mean_vector(const std::vector<LabelCounts>& row) {
  std::vector<double> v;
  v.reserve(row.size());
  for (const auto& c : row) v.push_back(c.mean());
  return v;
}

}  // namespace

FixedRobustness robustness_fixed(std::span<const ScoredRecord> records,
                                 const std::vector<std::string>& group_order,
                                 const RobustnessOptions& options) {
  if (options.sample_n < 2) throw ConfigError("robustness_fixed needs sample_n >= 2");
  const auto rows = eligible_rows(records, group_order, options.include_original);
  if (rows.ids.size() < options.sample_n)
    throw ConfigError("robustness_fixed: " + std::to_string(rows.ids.size()) +
                      " eligible structures, need " + std::to_string(options.sample_n));
  SeededRng rng(options.rng_seed);
  const auto picks = rng.sample_indices(rows.ids.size(), options.sample_n);
  std::vector<std::vector<double>> vectors;
  FixedRobustness out;
  for (auto i : picks) {
    out.sampled.push_back(rows.ids[i]);
    vectors.push_back(mean_vector(rows.rows[i]));
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < vectors.size(); ++a)
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      sum += cosine_similarity(vectors[a], vectors[b]);
      ++out.pairs;
    }
  out.value = sum / static_cast<double>(out.pairs);
  return out;
}

SplitRobustness robustness_split(std::span<const ScoredRecord> records,
                                 const std::vector<std::string>& group_order,
                                 const RobustnessOptions& options) {
  if (options.n_splits < 1) throw ConfigError("robustness_split needs n_splits >= 1");
  const auto rows = eligible_rows(records, group_order, options.include_original);
  const std::size_t n = rows.ids.size();
  if (n < 2) throw ConfigError("robustness_split needs at least 2 eligible structures");
  SeededRng rng(options.rng_seed);
  std::vector<std::size_t> order(n);
  SplitRobustness out;
  for (std::size_t s = 0; s < options.n_splits; ++s) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<LabelCounts> first(group_order.size());
    std::vector<LabelCounts> second(group_order.size());
    for (std::size_t i = 0; i < n; ++i) {
      auto& half = i < n / 2 ? first : second;
      for (std::size_t g = 0; g < group_order.size(); ++g) half[g] += rows.rows[order[i]][g];
    }
    out.per_split.push_back(cosine_similarity(mean_vector(first), mean_vector(second)));
  }
  out.value = std::accumulate(out.per_split.begin(), out.per_split.end(), 0.0) /
              static_cast<double>(out.per_split.size());
  return out;
}

RobustnessReport robustness(std::span<const ScoredRecord> records,
                            const std::vector<std::string>& group_order,
                            const RobustnessOptions& options) {
  const auto fixed = robustness_fixed(records, group_order, options);
  const auto split = robustness_split(records, group_order, options);
  RobustnessReport r;
  r.fixed_structure_similarity = fixed.value;
  r.split_half_similarity = split.value;
  r.sample_n = options.sample_n;
  r.n_splits = options.n_splits;
  r.structures_available = eligible_rows(records, group_order, options.include_original).ids.size();
  r.rng_seed = options.rng_seed;
  r.include_original = options.include_original;
  r.sampled_structures = fixed.sampled;
  r.split_similarities = split.per_split;
  return r;
}

// ---------------------------------------------------------------------------

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) throw ConfigError("Fleiss kappa needs at least one item");
  const std::size_t categories = counts.front().size();
  if (categories == 0) throw ConfigError("Fleiss kappa needs at least one category");
  std::int64_t raters = -1;
  std::vector<std::int64_t> totals(categories, 0);
  double agreement_sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& row = counts[i];
    if (row.size() != categories)
      throw ConfigError("Fleiss kappa: item " + std::to_string(i) + " has " +
                        std::to_string(row.size()) + " categories, expected " +
                        std::to_string(categories));
    std::int64_t n = 0;
    std::int64_t sq = 0;
    for (std::size_t j = 0; j < categories; ++j) {
      if (row[j] < 0) throw ConfigError("Fleiss kappa: negative count");
      n += row[j];
      sq += static_cast<std::int64_t>(row[j]) * row[j];
      totals[j] += row[j];
    }
    if (raters < 0) raters = n;
    if (n != raters)
      throw ConfigError("Fleiss kappa: item " + std::to_string(i) + " has " + std::to_string(n) +
                        " ratings, expected " + std::to_string(raters));
    agreement_sum += static_cast<double>(sq - n) / static_cast<double>(n * (n - 1) == 0 ? 1 : n * (n - 1));
  }
  if (raters < 2) throw ConfigError("Fleiss kappa needs at least 2 raters per item");
  const double p_bar = agreement_sum / static_cast<double>(counts.size());
  const double all = static_cast<double>(raters) * static_cast<double>(counts.size());
  const auto used = std::count_if(totals.begin(), totals.end(), [](std::int64_t t) { return t > 0; });
  if (used == 1) return 1.0;  // chance agreement is 1, and so is observed agreement
  double p_e = 0.0;
  for (auto t : totals) {
    const double pj = static_cast<double>(t) / all;
    p_e += pj * pj;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

double judgment_accuracy(const std::vector<std::vector<bool>>& judgments_per_annotator) {
  if (judgments_per_annotator.empty()) throw ConfigError("judgment accuracy needs at least one annotator");
  double sum = 0.0;
  for (std::size_t a = 0; a < judgments_per_annotator.size(); ++a) {
    const auto& js = judgments_per_annotator[a];
    if (js.empty()) throw ConfigError("annotator " + std::to_string(a) + " has no judgments");
    const auto correct = std::count(js.begin(), js.end(), true);
    sum += static_cast<double>(correct) / static_cast<double>(js.size());
  }
  return sum / static_cast<double>(judgments_per_annotator.size());
}

// ---------------------------------------------------------------------------

AnalysisResult analyze(std::span<const ScoredRecord> records,
                       const std::vector<DemographicGroup>& groups, const AnalysisOptions& options) {
  AnalysisResult out;
  for (const auto& g : groups) out.group_order.push_back(g.id);

  std::set<Axis> axes;
  for (const auto& g : groups) axes.insert(g.axis);

  for (Scope scope : {Scope::all_prompts, Scope::paraphrased_only, Scope::original_only}) {
    auto& stats = out.group_stats[std::string(to_string(scope))];
    stats.push_back(group_stats(records, kAllGroups, scope));
    for (const auto& id : out.group_order) stats.push_back(group_stats(records, id, scope));
    if (scope == Scope::all_prompts) continue;
    auto& gaps = out.pairwise_gap[std::string(to_string(scope))];
    for (Axis axis : kAllAxes)
      if (axes.count(axis) != 0) gaps.push_back(pairwise_gap(records, groups, axis, scope));
  }

  std::map<std::string, Categorical> dists;
  for (const auto& s : out.group_stats.at("paraphrased_only")) {
    if (s.group_id != kAllGroups) dists.emplace(s.group_id, s.dist);
    if (s.group_id != kAllGroups) out.score_general.emplace_back(s.group_id, s.mean);
  }
  out.kl_matrix = kl_matrix(out.group_order, dists, options.kl_epsilon);

  out.per_structure_means = per_structure_means(records, out.group_order);
  const std::size_t k = std::min(options.k, out.per_structure_means.rows());
  out.top_bottom = top_bottom_structures(out.per_structure_means, k);
  for (Axis axis : kAllAxes)
    if (axes.count(axis) != 0)
      out.per_structure_gaps.push_back(per_structure_gaps(out.per_structure_means, groups, axis, k));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

nlohmann::json id_values(const std::vector<std::pair<int, double>>& xs) {
  auto arr = nlohmann::json::array();
  for (const auto& [id, v] : xs) arr.push_back({{"structure", id}, {"gap", number_or_null(v)}});
  return arr;
}

std::vector<std::pair<int, double>> id_values_from(const nlohmann::json& j) {
  std::vector<std::pair<int, double>> out;
  for (const auto& e : j) out.emplace_back(e.at("structure").get<int>(), number_from(e.at("gap")));
  return out;
}

nlohmann::json named_values(const std::vector<std::pair<std::string, double>>& xs) {
  auto arr = nlohmann::json::array();
  for (const auto& [id, v] : xs) arr.push_back({{"group", id}, {"value", number_or_null(v)}});
  return arr;
}

std::vector<std::pair<std::string, double>> named_values_from(const nlohmann::json& j) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : j) out.emplace_back(e.at("group").get<std::string>(), number_from(e.at("value")));
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const GroupStats& v) {
  j = {{"group", v.group_id}, {"n", v.n}, {"mean", number_or_null(v.mean)}, {"std", v.std},
       {"dist", v.dist.as_array()}};
}

void from_json(const nlohmann::json& j, GroupStats& v) {
  v.group_id = j.at("group").get<std::string>();
  v.n = j.at("n").get<std::size_t>();
  v.mean = number_from(j.at("mean"));
  v.std = j.at("std").get<double>();
  v.dist = Categorical::from_array(j.at("dist").get<std::array<double, 3>>());
}

void to_json(nlohmann::json& j, const GapReport& v) {
  j = {{"axis", to_string(v.axis)},
       {"advantaged", v.advantaged},
       {"disadvantaged", v.disadvantaged},
       {"advantaged_mean", v.advantaged_mean},
       {"disadvantaged_mean", v.disadvantaged_mean},
       {"gap", v.gap}};
}

void from_json(const nlohmann::json& j, GapReport& v) {
  v.axis = parse_axis(j.at("axis").get<std::string>());
  v.advantaged = j.at("advantaged").get<std::string>();
  v.disadvantaged = j.at("disadvantaged").get<std::string>();
  v.advantaged_mean = j.at("advantaged_mean").get<double>();
  v.disadvantaged_mean = j.at("disadvantaged_mean").get<double>();
  v.gap = j.at("gap").get<double>();
}

void to_json(nlohmann::json& j, const KLMatrix& v) { j = {{"groups", v.groups}, {"values", v.values}}; }

void from_json(const nlohmann::json& j, KLMatrix& v) {
  v.groups = j.at("groups").get<std::vector<std::string>>();
  v.values = j.at("values").get<std::vector<std::vector<double>>>();
}

void to_json(nlohmann::json& j, const StructureGroupMatrix& v) {
  auto means = nlohmann::json::array();
  auto ns = nlohmann::json::array();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto mr = nlohmann::json::array();
    auto nr = nlohmann::json::array();
    for (std::size_t c = 0; c < v.cols(); ++c) {
      mr.push_back(number_or_null(v.cell(r, c).mean));
      nr.push_back(v.cell(r, c).n);
    }
    means.push_back(std::move(mr));
    ns.push_back(std::move(nr));
  }
  j = {{"structures", v.structure_ids()}, {"groups", v.group_ids()}, {"mean", means}, {"n", ns}};
}

void from_json(const nlohmann::json& j, StructureGroupMatrix& v) {
  v = StructureGroupMatrix(j.at("structures").get<std::vector<int>>(),
                           j.at("groups").get<std::vector<std::string>>());
  const auto& means = j.at("mean");
  const auto& ns = j.at("n");
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c)
      v.cell(r, c) = {number_from(means.at(r).at(c)), ns.at(r).at(c).get<std::size_t>()};
}

void to_json(nlohmann::json& j, const TopBottom& v) {
  auto per_group = nlohmann::json::array();
  for (const auto& g : v.per_group)
    per_group.push_back({{"group", g.group_id}, {"best", g.best}, {"worst", g.worst}});
  j = {{"k", v.k},
       {"per_group", per_group},
       {"best_intersection", v.best_intersection},
       {"worst_intersection", v.worst_intersection},
       {"best_union", v.best_union},
       {"worst_union", v.worst_union},
       {"best_union_means", named_values(v.best_union_means)},
       {"worst_union_means", named_values(v.worst_union_means)}};
}

void from_json(const nlohmann::json& j, TopBottom& v) {
  v.k = j.at("k").get<std::size_t>();
  v.per_group.clear();
  for (const auto& g : j.at("per_group"))
    v.per_group.push_back({g.at("group").get<std::string>(), g.at("best").get<std::vector<int>>(),
                           g.at("worst").get<std::vector<int>>()});
  v.best_intersection = j.at("best_intersection").get<std::vector<int>>();
  v.worst_intersection = j.at("worst_intersection").get<std::vector<int>>();
  v.best_union = j.at("best_union").get<std::vector<int>>();
  v.worst_union = j.at("worst_union").get<std::vector<int>>();
  v.best_union_means = named_values_from(j.at("best_union_means"));
  v.worst_union_means = named_values_from(j.at("worst_union_means"));
}

void to_json(nlohmann::json& j, const StructureGaps& v) {
  j = {{"axis", to_string(v.axis)},
       {"gaps", id_values(v.gaps)},
       {"best", id_values(v.best)},
       {"worst", id_values(v.worst)},
       {"best_mean", number_or_null(v.best_mean)},
       {"worst_mean", number_or_null(v.worst_mean)}};
}

void from_json(const nlohmann::json& j, StructureGaps& v) {
  v.axis = parse_axis(j.at("axis").get<std::string>());
  v.gaps = id_values_from(j.at("gaps"));
  v.best = id_values_from(j.at("best"));
  v.worst = id_values_from(j.at("worst"));
  v.best_mean = number_from(j.at("best_mean"));
  v.worst_mean = number_from(j.at("worst_mean"));
}

void to_json(nlohmann::json& j, const RobustnessReport& v) {
  j = {{"fixed_structure_similarity", v.fixed_structure_similarity},
       {"split_half_similarity", v.split_half_similarity},
       {"sample_n", v.sample_n},
       {"n_splits", v.n_splits},
       {"structures_available", v.structures_available},
       {"rng_seed", v.rng_seed},
       {"include_original", v.include_original},
       {"sampled_structures", v.sampled_structures},
       {"split_similarities", v.split_similarities}};
}

void from_json(const nlohmann::json& j, RobustnessReport& v) {
  v.fixed_structure_similarity = j.at("fixed_structure_similarity").get<double>();
  v.split_half_similarity = j.at("split_half_similarity").get<double>();
  v.sample_n = j.at("sample_n").get<std::size_t>();
  v.n_splits = j.at("n_splits").get<std::size_t>();
  v.structures_available = j.at("structures_available").get<std::size_t>();
  v.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  v.include_original = j.at("include_original").get<bool>();
  v.sampled_structures = j.at("sampled_structures").get<std::vector<int>>();
  v.split_similarities = j.at("split_similarities").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const AnalysisResult& v) {
  j = {{"group_order", v.group_order},
       {"group_stats", v.group_stats},
       {"score_general", named_values(v.score_general)},
       {"pairwise_gap", v.pairwise_gap},
       {"kl_matrix", v.kl_matrix},
       {"per_structure_means", v.per_structure_means},
       {"top_bottom_structures", v.top_bottom},
       {"per_structure_gaps", v.per_structure_gaps}};
}

void from_json(const nlohmann::json& j, AnalysisResult& v) {
  v.group_order = j.at("group_order").get<std::vector<std::string>>();
  v.group_stats = j.at("group_stats").get<std::map<std::string, std::vector<GroupStats>>>();
  v.score_general = named_values_from(j.at("score_general"));
  v.pairwise_gap = j.at("pairwise_gap").get<std::map<std::string, std::vector<GapReport>>>();
  v.kl_matrix = j.at("kl_matrix").get<KLMatrix>();
  v.per_structure_means = j.at("per_structure_means").get<StructureGroupMatrix>();
  v.top_bottom = j.at("top_bottom_structures").get<TopBottom>();
  v.per_structure_gaps = j.at("per_structure_gaps").get<std::vector<StructureGaps>>();
}

}  // namespace regard
