#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/analysis.hpp"
#include "regard/runner.hpp"

namespace regard {

struct SampleRow {
  std::string group_id;
  RegardLabel label = RegardLabel::neutral;
  std::string record_key;
  std::string prompt_text;
  std::string generated_text;

  bool operator==(const SampleRow&) const = default;
};

struct SampleDump {
  std::size_t per_cell = 0;
  std::uint64_t rng_seed = 0;
  std::optional<RegardLabel> label_filter;
  std::vector<SampleRow> rows;  // grouped by (group, label)

  bool operator==(const SampleDump&) const = default;
};

// Stratified sample of at most per_cell records per (group, label) cell,
// drawn without replacement. Groups follow group_order (groups absent from
// it are appended alphabetically).
SampleDump sample_dump(const std::vector<ScoredRecord>& records, std::size_t per_cell,
                       std::uint64_t rng_seed, const std::vector<std::string>& group_order = {},
                       std::optional<RegardLabel> label_filter = std::nullopt);

struct ReportBundle {
  std::optional<AnalysisResult> analysis;
  std::optional<RobustnessReport> robustness;
  std::optional<SampleDump> samples;
  std::optional<nlohmann::json> manifest;
  std::map<int, std::string> structure_text;  // optional labels for structure ids

  // Names of the required sections that are absent.
  std::vector<std::string> missing_keys() const;
  bool operator==(const ReportBundle&) const = default;
};

enum class ReportFormat { markdown, json, csv };

std::string_view to_string(ReportFormat f);
ReportFormat parse_report_format(std::string_view text);

// File name -> contents. markdown: report.md, samples.md; json: report.json;
// csv: regard_distribution.csv, group_means.csv, structure_selection.csv,
// pairwise_gaps.csv, structure_gaps.csv, kl_divergence.csv.
// Throws ConfigError listing missing keys for an incomplete bundle.
std::map<std::string, std::string> render(const ReportBundle& bundle, ReportFormat format);

// Renders every format into dir (created if needed); returns the file names.
std::vector<std::string> write_report(const ReportBundle& bundle, const std::filesystem::path& dir);

// Integer percentage rounded half up, computed on the exact count.
int rounded_percent(double fraction, std::size_t n);

void to_json(nlohmann::json& j, const SampleDump& v);
void from_json(const nlohmann::json& j, SampleDump& v);
void to_json(nlohmann::json& j, const ReportBundle& v);
void from_json(const nlohmann::json& j, ReportBundle& v);

}  // namespace regard
