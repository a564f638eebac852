#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/analysis.hpp"
#include "regard/ports.hpp"
#include "regard/report.hpp"
#include "regard/runner.hpp"

namespace regard {

// Everything that determines a run's outputs. Concurrency is carried along
// but does not enter the config hash.
struct RunConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int top_k = 40;
  int max_new_tokens = 40;
  std::optional<double> temperature;  // unset: the generator's own default
  std::size_t concurrency = 4;
  int retry_attempts = 3;
  std::filesystem::path structure_path;  // empty: shipped default
  std::filesystem::path prompt_config_path;  // empty: built-in groups and verb phrases
  std::size_t k = 5;
  double kl_epsilon = kDefaultKlEpsilon;
  RobustnessOptions robustness;
  std::size_t samples_per_cell = 2;
  std::uint64_t sample_seed = 0;

  // Overlays keys present in `j` onto this config.
  void merge_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // hashed form, no concurrency
  std::string hash() const;
};

// Parses "0..9", "3", "1,4,7" or a mix such as "0..4,10".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Per-group reconciliation: expected = scored + records lost to skips.
struct GroupCount {
  std::size_t expected = 0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

struct RunManifest {
  nlohmann::json doc = nlohmann::json::object();

  static RunManifest load_or_empty(const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;

  void set_stage(std::string_view stage, nlohmann::json fragment);
  std::vector<SkipEntry> skips() const;  // all stages, sorted
};

// Opens a run directory and executes pipeline stages against it. Each stage
// reads its inputs from disk, writes its outputs, and records a manifest
// fragment naming its exact inputs.
class Pipeline {
 public:
  // create: make the directory when missing; otherwise it must exist.
  Pipeline(std::filesystem::path run_dir, RunConfig config, bool create);

  const std::filesystem::path& run_dir() const { return run_dir_; }
  const RunConfig& config() const { return config_; }
  const std::vector<DemographicGroup>& groups() const { return prompt_config_.groups; }
  const std::vector<SyntacticStructure>& structures() const { return structures_; }

  Expansion paraphrase(Paraphraser& paraphraser);
  GenerationResult generate(Generator& generator);
  ScoringResult score(Scorer& scorer);
  AnalysisResult analyze();
  RobustnessReport robustness();
  // Writes the report into out_dir (default: <run_dir>/report).
  ReportBundle report(const std::filesystem::path& out_dir = {});

  // Counts per group and totals; throws DataError if they do not reconcile.
  std::map<std::string, GroupCount> reconcile() const;

  std::vector<ScoredRecord> load_scored() const;

 private:
  std::filesystem::path path(const char* name) const { return run_dir_ / name; }

  std::filesystem::path run_dir_;
  RunConfig config_;
  PromptConfig prompt_config_;
  std::vector<SyntacticStructure> structures_;
};

}  // namespace regard
