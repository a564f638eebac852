#include "regard/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "regard/error.hpp"
#include "regard/random.hpp"
#include "regard/store.hpp"

namespace regard {

namespace {

std::string num(double v, int precision) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  // "-0.000" -> "0.000"
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string csv_num(double v) { return std::isnan(v) ? "" : num(v, 6); }

std::string join_ids(const std::vector<int>& ids, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += sep;
    out += std::to_string(ids[i]);
  }
  return out;
}

std::string md_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

const std::vector<GroupStats>& stats_for(const AnalysisResult& a, Scope scope) {
  const auto it = a.group_stats.find(std::string(to_string(scope)));
  if (it == a.group_stats.end())
    throw ConfigError("analysis lacks group_stats." + std::string(to_string(scope)));
  return it->second;
}

const std::vector<GapReport>& gaps_for(const AnalysisResult& a, Scope scope) {
  const auto it = a.pairwise_gap.find(std::string(to_string(scope)));
  if (it == a.pairwise_gap.end())
    throw ConfigError("analysis lacks pairwise_gap." + std::string(to_string(scope)));
  return it->second;
}

std::vector<int> ids_of(const std::vector<std::pair<int, double>>& xs) {
  std::vector<int> out;
  for (const auto& [id, _] : xs) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// markdown

std::string render_samples_md(const SampleDump& dump) {
  std::ostringstream md;
  md << "# Sampled generations\n\n";
  md << "Up to " << dump.per_cell << " per (group, label), seed " << dump.rng_seed;
  if (dump.label_filter) md << ", label " << to_string(*dump.label_filter) << " only";
  md << ".\n\n";
  if (dump.rows.empty()) {
    md << "no samples\n";
    return md.str();
  }
  md << "| group | label | prompt | generated output | record |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& r : dump.rows) {
    md << "| " << r.group_id << " | " << to_string(r.label) << " | " << md_escape(r.prompt_text)
       << " | " << md_escape(r.generated_text) << " | `" << r.record_key << "` |\n";
  }
  return md.str();
}

std::string structure_label(const ReportBundle& b, int id) {
  const auto it = b.structure_text.find(id);
  if (it == b.structure_text.end()) return std::to_string(id);
  return std::to_string(id) + " `" + it->second + "`";
}

std::string render_report_md(const ReportBundle& b) {
  const AnalysisResult& a = *b.analysis;
  const auto& orig = stats_for(a, Scope::original_only);
  const auto& para = stats_for(a, Scope::paraphrased_only);
  std::ostringstream md;
  md << "# Regard audit report\n\n";

  md << "## Regard distribution (%)\n\n";
  md << "| group | original pos | original neg | original neu | paraphrased pos | paraphrased neg | "
        "paraphrased neu |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < para.size(); ++i) {
    const auto& o = orig[i];
    const auto& p = para[i];
    md << "| " << p.group_id << " | " << rounded_percent(o.dist.positive, o.n) << " | "
       << rounded_percent(o.dist.negative, o.n) << " | " << rounded_percent(o.dist.neutral, o.n) << " | "
       << rounded_percent(p.dist.positive, p.n) << " | " << rounded_percent(p.dist.negative, p.n)
       << " | " << rounded_percent(p.dist.neutral, p.n) << " |\n";
  }

  md << "\n## Mean regard\n\n";
  md << "| group | original mean | original std | original n | paraphrased mean | paraphrased std | "
        "paraphrased n |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < para.size(); ++i) {
    const auto& o = orig[i];
    const auto& p = para[i];
    md << "| " << p.group_id << " | " << num(o.mean, 4) << " | " << num(o.std, 4) << " | " << o.n
       << " | " << num(p.mean, 4) << " | " << num(p.std, 4) << " | " << p.n << " |\n";
  }

  const auto& tb = a.top_bottom;
  md << "\n## Best and worst structures (k = " << tb.k << ")\n\n";
  md << "| group | best-structure mean | worst-structure mean | best ids | worst ids |\n";
  md << "|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < tb.best_union_means.size(); ++i) {
    const auto& id = tb.best_union_means[i].first;
    std::string best_ids = "union";
    std::string worst_ids = "union";
    for (const auto& g : tb.per_group)
      if (g.group_id == id) {
        best_ids = join_ids(g.best, ", ");
        worst_ids = join_ids(g.worst, ", ");
      }
    md << "| " << id << " | " << num(tb.best_union_means[i].second, 4) << " | "
       << num(tb.worst_union_means[i].second, 4) << " | " << best_ids << " | " << worst_ids << " |\n";
  }
  const auto id_list = [&](const std::vector<int>& ids) {
    if (ids.empty()) return std::string("(empty)");
    std::string s;
    for (int id : ids) s += "\n  - " + structure_label(b, id);
    return s;
  };
  md << "\n- best in every group: " << id_list(tb.best_intersection) << "\n";
  md << "- worst in every group: " << id_list(tb.worst_intersection) << "\n";
  md << "- best union: " << join_ids(tb.best_union, ", ") << "\n";
  md << "- worst union: " << join_ids(tb.worst_union, ", ") << "\n";

  md << "\n## Regard gap (advantaged - disadvantaged)\n\n";
  md << "| axis | pair | original gap | paraphrased gap |\n|---|---|---|---|\n";
  const auto& go = gaps_for(a, Scope::original_only);
  const auto& gp = gaps_for(a, Scope::paraphrased_only);
  for (std::size_t i = 0; i < gp.size(); ++i) {
    md << "| " << to_string(gp[i].axis) << " | " << gp[i].advantaged << " - " << gp[i].disadvantaged
       << " | " << num(go[i].gap, 4) << " | " << num(gp[i].gap, 4) << " |\n";
  }

  md << "\n## Structure-segregated gap\n\n";
  md << "| axis | best-structure mean gap | best ids | worst-structure mean gap | worst ids |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& g : a.per_structure_gaps) {
    md << "| " << to_string(g.axis) << " | " << num(g.best_mean, 4) << " | "
       << join_ids(ids_of(g.best), ", ") << " | " << num(g.worst_mean, 4) << " | "
       << join_ids(ids_of(g.worst), ", ") << " |\n";
  }

  md << "\n## Pairwise KL divergence (row || column)\n\n|   |";
  for (const auto& g : a.kl_matrix.groups) md << " " << g << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < a.kl_matrix.groups.size(); ++i) md << "---|";
  md << "\n";
  for (std::size_t r = 0; r < a.kl_matrix.groups.size(); ++r) {
    md << "| " << a.kl_matrix.groups[r] << " |";
    for (double v : a.kl_matrix.values[r]) md << " " << num(v, 2) << " |";
    md << "\n";
  }

  const auto& rb = *b.robustness;
  md << "\n## Robustness\n\n";
  md << "| estimate | cosine similarity |\n|---|---|\n";
  md << "| single structure (" << rb.sample_n << " sampled, pairwise mean) | "
     << num(rb.fixed_structure_similarity, 3) << " |\n";
  md << "| split halves (" << rb.n_splits << " splits) | " << num(rb.split_half_similarity, 3)
     << " |\n";
  md << "\nRNG seed " << rb.rng_seed << "; " << rb.structures_available
     << " eligible structures; sampled: " << join_ids(rb.sampled_structures, ", ") << ".\n";

  md << "\n## Samples\n\n";
  if (b.samples->rows.empty())
    md << "no samples\n";
  else
    md << b.samples->rows.size() << " sampled generations, see samples.md.\n";

  md << "\n## Run manifest\n\n```json\n" << b.manifest->dump(2) << "\n```\n";
  return md.str();
}

// ---------------------------------------------------------------------------
// csv

std::map<std::string, std::string> render_csv(const ReportBundle& b) {
  const AnalysisResult& a = *b.analysis;
  std::map<std::string, std::string> files;
  const std::pair<const char*, Scope> views[] = {{"original", Scope::original_only},
                                                 {"paraphrased", Scope::paraphrased_only}};
  {
    std::ostringstream csv;
    csv << "view,group,n,positive,negative,neutral\n";
    for (const auto& [name, scope] : views)
      for (const auto& s : stats_for(a, scope))
        csv << name << "," << s.group_id << "," << s.n << "," << csv_num(s.dist.positive) << ","
            << csv_num(s.dist.negative) << "," << csv_num(s.dist.neutral) << "\n";
    files["regard_distribution.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    csv << "view,group,n,mean,std\n";
    for (const auto& [name, scope] : views)
      for (const auto& s : stats_for(a, scope))
        csv << name << "," << s.group_id << "," << s.n << "," << csv_num(s.mean) << ","
            << csv_num(s.std) << "\n";
    files["group_means.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    csv << "series,group,mean,structures\n";
    const auto& tb = a.top_bottom;
    for (const auto& [id, v] : tb.best_union_means)
      csv << "best," << id << "," << csv_num(v) << "," << join_ids(tb.best_union, ";") << "\n";
    for (const auto& [id, v] : tb.worst_union_means)
      csv << "worst," << id << "," << csv_num(v) << "," << join_ids(tb.worst_union, ";") << "\n";
    files["structure_selection.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    csv << "view,axis,advantaged,disadvantaged,advantaged_mean,disadvantaged_mean,gap\n";
    for (const auto& [name, scope] : views)
      for (const auto& g : gaps_for(a, scope))
        csv << name << "," << to_string(g.axis) << "," << g.advantaged << "," << g.disadvantaged << ","
            << csv_num(g.advantaged_mean) << "," << csv_num(g.disadvantaged_mean) << ","
            << csv_num(g.gap) << "\n";
    files["pairwise_gaps.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    csv << "series,axis,mean_gap,structures\n";
    for (const auto& g : a.per_structure_gaps)
      csv << "best," << to_string(g.axis) << "," << csv_num(g.best_mean) << ","
          << join_ids(ids_of(g.best), ";") << "\n";
    for (const auto& g : a.per_structure_gaps)
      csv << "worst," << to_string(g.axis) << "," << csv_num(g.worst_mean) << ","
          << join_ids(ids_of(g.worst), ";") << "\n";
    files["structure_gaps.csv"] = csv.str();
  }
  {
    std::ostringstream csv;
    csv << "row";
    for (const auto& g : a.kl_matrix.groups) csv << "," << g;
    csv << "\n";
    for (std::size_t r = 0; r < a.kl_matrix.groups.size(); ++r) {
      csv << a.kl_matrix.groups[r];
      for (double v : a.kl_matrix.values[r]) csv << "," << csv_num(v);
      csv << "\n";
    }
    files["kl_divergence.csv"] = csv.str();
  }
  return files;
}

}  // namespace

// ---------------------------------------------------------------------------

int rounded_percent(double fraction, std::size_t n) {
  if (n == 0) return 0;
  const auto count = static_cast<long long>(std::llround(fraction * static_cast<double>(n)));
  const auto nn = static_cast<long long>(n);
  return static_cast<int>((200 * count + nn) / (2 * nn));
}

SampleDump sample_dump(const std::vector<ScoredRecord>& records, std::size_t per_cell,
                       std::uint64_t rng_seed, const std::vector<std::string>& group_order,
                       std::optional<RegardLabel> label_filter) {
  std::vector<std::string> order = group_order;
  std::set<std::string> extra;
  for (const auto& r : records)
    if (std::find(order.begin(), order.end(), r.key.group_id) == order.end()) extra.insert(r.key.group_id);
  order.insert(order.end(), extra.begin(), extra.end());

  std::map<std::pair<std::string, RegardLabel>, std::vector<const ScoredRecord*>> cells;
  for (const auto& r : records) cells[{r.key.group_id, r.label}].push_back(&r);
  for (auto& [_, v] : cells)
    std::sort(v.begin(), v.end(), [](const ScoredRecord* x, const ScoredRecord* y) {
      if (x->key != y->key) return x->key < y->key;
      return x->seed < y->seed;
    });

  SampleDump dump{per_cell, rng_seed, label_filter, {}};
  SeededRng rng(rng_seed);
  for (const auto& g : order) {
    for (RegardLabel label : kAllLabels) {
      if (label_filter && label != *label_filter) continue;
      const auto it = cells.find({g, label});
      if (it == cells.end()) continue;
      const auto& pool = it->second;
      auto picks = rng.sample_indices(pool.size(), std::min(per_cell, pool.size()));
      std::sort(picks.begin(), picks.end());
      for (auto i : picks) {
        const auto* r = pool[i];
        dump.rows.push_back({g, label, r->record_key(), r->prompt_text, r->generated_text});
      }
    }
  }
  return dump;
}

std::vector<std::string> ReportBundle::missing_keys() const {
  std::vector<std::string> out;
  if (!analysis) out.emplace_back("analysis");
  if (!robustness) out.emplace_back("robustness");
  if (!samples) out.emplace_back("samples");
  if (!manifest) out.emplace_back("manifest");
  return out;
}

std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::markdown: return "markdown";
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
  }
  return "?";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::markdown;
  if (text == "json") return ReportFormat::json;
  if (text == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format '" + std::string(text) + "'");
}

std::map<std::string, std::string> render(const ReportBundle& bundle, ReportFormat format) {
  if (const auto missing = bundle.missing_keys(); !missing.empty()) {
    std::string msg = "report bundle is incomplete, missing:";
    for (const auto& k : missing) msg += " " + k;
    throw ConfigError(msg);
  }
  switch (format) {
    case ReportFormat::markdown:
      return {{"report.md", render_report_md(bundle)}, {"samples.md", render_samples_md(*bundle.samples)}};
    case ReportFormat::json:
      return {{"report.json", nlohmann::json(bundle).dump(2) + "\n"}};
    case ReportFormat::csv:
      return render_csv(bundle);
  }
  return {};
}

std::vector<std::string> write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (auto format : {ReportFormat::markdown, ReportFormat::json, ReportFormat::csv})
    for (const auto& [name, text] : render(bundle, format)) {
      write_text_file(dir / name, text);
      written.push_back(name);
    }
  return written;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const SampleDump& v) {
  auto rows = nlohmann::json::array();
  for (const auto& r : v.rows)
    rows.push_back({{"group", r.group_id},
                    {"label", to_string(r.label)},
                    {"record_key", r.record_key},
                    {"prompt_text", r.prompt_text},
                    {"generated_text", r.generated_text}});
  j = {{"per_cell", v.per_cell}, {"rng_seed", v.rng_seed}, {"rows", rows}};
  j["label_filter"] = v.label_filter ? nlohmann::json(to_string(*v.label_filter)) : nlohmann::json();
}

void from_json(const nlohmann::json& j, SampleDump& v) {
  v.per_cell = j.at("per_cell").get<std::size_t>();
  v.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  const auto& f = j.at("label_filter");
  v.label_filter = f.is_null() ? std::nullopt : std::optional(parse_regard_label(f.get<std::string>()));
  v.rows.clear();
  for (const auto& r : j.at("rows"))
    v.rows.push_back({r.at("group").get<std::string>(), parse_regard_label(r.at("label").get<std::string>()),
                      r.at("record_key").get<std::string>(), r.at("prompt_text").get<std::string>(),
                      r.at("generated_text").get<std::string>()});
}

void to_json(nlohmann::json& j, const ReportBundle& v) {
  j = nlohmann::json::object();
  if (v.analysis) j["analysis"] = *v.analysis;
  if (v.robustness) j["robustness"] = *v.robustness;
  if (v.samples) j["samples"] = *v.samples;
  if (v.manifest) j["manifest"] = *v.manifest;
  auto st = nlohmann::json::object();
  for (const auto& [id, text] : v.structure_text) st[std::to_string(id)] = text;
  j["structure_text"] = st;
}

void from_json(const nlohmann::json& j, ReportBundle& v) {
  v = ReportBundle{};
  if (j.contains("analysis")) v.analysis = j["analysis"].get<AnalysisResult>();
  if (j.contains("robustness")) v.robustness = j["robustness"].get<RobustnessReport>();
  if (j.contains("samples")) v.samples = j["samples"].get<SampleDump>();
  if (j.contains("manifest")) v.manifest = j["manifest"];
  if (j.contains("structure_text"))
    for (const auto& [id, text] : j["structure_text"].items())
      v.structure_text[std::stoi(id)] = text.get<std::string>();
}

}  // namespace regard
