#include "regard/annotate.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "regard/analysis.hpp"
#include "regard/error.hpp"
#include "regard/store.hpp"

namespace regard {

std::string_view to_string(Judgment j) { return j == Judgment::correct ? "correct" : "incorrect"; }

Judgment parse_judgment(std::string_view text) {
  if (text == "correct") return Judgment::correct;
  if (text == "incorrect") return Judgment::incorrect;
  throw DataError("unknown judgment '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const Annotation& v) {
  j = {{"record_key", v.record_key},
       {"predicted_label", to_string(v.predicted_label)},
       {"judgment", to_string(v.judgment)},
       {"annotator_id", v.annotator_id}};
}

void from_json(const nlohmann::json& j, Annotation& v) {
  v.record_key = j.at("record_key").get<std::string>();
  v.predicted_label = parse_regard_label(j.at("predicted_label").get<std::string>());
  v.judgment = parse_judgment(j.at("judgment").get<std::string>());
  v.annotator_id = j.at("annotator_id").get<std::string>();
}

std::vector<Annotation> load_annotations(const std::vector<std::filesystem::path>& files) {
  std::vector<Annotation> out;
  for (const auto& f : files) {
    const auto doc = read_json_file(f);
    if (!doc.is_array()) throw DataError(f.string() + ": expected a JSON array of annotations");
    try {
      for (const auto& a : doc) out.push_back(a.get<Annotation>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  return out;
}

void save_annotations(const std::filesystem::path& path, const std::vector<Annotation>& items) {
  write_json_file(path, nlohmann::json(items));
}

AgreementSummary summarize_agreement(const std::vector<Annotation>& annotations) {
  if (annotations.empty()) throw ConfigError("no annotations");
  std::map<std::string, std::vector<bool>> by_annotator;
  std::map<std::string, std::vector<int>> by_item;  // {correct, incorrect}
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& a : annotations) {
    if (!seen.emplace(a.annotator_id, a.record_key).second)
      throw ConfigError("annotator '" + a.annotator_id + "' judged " + a.record_key + " twice");
    by_annotator[a.annotator_id].push_back(a.judgment == Judgment::correct);
    auto& row = by_item[a.record_key];
    row.resize(2, 0);
    row[a.judgment == Judgment::correct ? 0 : 1] += 1;
  }
  AgreementSummary s;
  std::vector<std::vector<bool>> judgments;
  for (const auto& [id, js] : by_annotator) {
    judgments.push_back(js);
    s.per_annotator.emplace_back(id, judgment_accuracy({js}));
  }
  s.accuracy = judgment_accuracy(judgments);
  std::vector<std::vector<int>> table;
  for (const auto& [key, row] : by_item) table.push_back(row);
  s.kappa = fleiss_kappa(table);
  s.items = table.size();
  s.annotators = by_annotator.size();
  return s;
}

std::vector<Annotation> annotate_interactive(const std::vector<ScoredRecord>& sample,
                                             const std::string& annotator_id, std::istream& in,
                                             std::ostream& out) {
  std::vector<Annotation> result;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& r = sample[i];
    out << "[" << (i + 1) << "/" << sample.size() << "] " << r.record_key() << "\n"
        << "  prompt:    " << r.prompt_text << "\n"
        << "  output:    " << r.generated_text << "\n"
        << "  predicted: " << to_string(r.label) << "\n"
        << "is the predicted regard correct? [y]es / [n]o / [s]kip / [q]uit: " << std::flush;
    std::string answer;
    bool stop = false;
    while (true) {
      if (!std::getline(in, answer)) {
        stop = true;
        break;
      }
      const auto c = answer.empty() ? '\0' : static_cast<char>(std::tolower(answer[0]));
      if (c == 'y' || c == 'c') {
        result.push_back({r.record_key(), r.label, Judgment::correct, annotator_id});
      } else if (c == 'n' || c == 'i') {
        result.push_back({r.record_key(), r.label, Judgment::incorrect, annotator_id});
      } else if (c == 'q') {
        stop = true;
      } else if (c != 's') {
        out << "please answer y, n, s or q: " << std::flush;
        continue;
      }
      break;
    }
    if (stop) break;
  }
  out << "\n";
  return result;
}

}  // namespace regard
