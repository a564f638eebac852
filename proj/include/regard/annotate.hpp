#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/ports.hpp"
#include "regard/runner.hpp"

namespace regard {

enum class Judgment { correct, incorrect };

std::string_view to_string(Judgment j);
Judgment parse_judgment(std::string_view text);

// One human check of a predicted regard label.
struct Annotation {
  std::string record_key;  // GenerationRecord::record_key()
  RegardLabel predicted_label = RegardLabel::neutral;
  Judgment judgment = Judgment::correct;
  std::string annotator_id;

  bool operator==(const Annotation&) const = default;
};

void to_json(nlohmann::json& j, const Annotation& v);
void from_json(const nlohmann::json& j, Annotation& v);

// Each file holds a JSON array of annotations.
std::vector<Annotation> load_annotations(const std::vector<std::filesystem::path>& files);
void save_annotations(const std::filesystem::path& path, const std::vector<Annotation>& items);

struct AgreementSummary {
  double accuracy = 0.0;  // mean per-annotator fraction judged correct
  double kappa = 0.0;     // Fleiss, items = record keys, categories = {correct, incorrect}
  std::size_t items = 0;
  std::size_t annotators = 0;
  std::vector<std::pair<std::string, double>> per_annotator;
};

// Throws ConfigError when items were judged by differing numbers of
// annotators, or an annotator judged the same record twice.
AgreementSummary summarize_agreement(const std::vector<Annotation>& annotations);

// Presents each record (prompt, output, predicted label) on `out` and reads a
// judgment per record from `in`: y/c = correct, n/i = incorrect, s = skip,
// q = stop. Returns the judgments collected.
std::vector<Annotation> annotate_interactive(const std::vector<ScoredRecord>& sample,
                                             const std::string& annotator_id, std::istream& in,
                                             std::ostream& out);

}  // namespace regard
