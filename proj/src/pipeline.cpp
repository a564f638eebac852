#include "regard/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>

#include "regard/error.hpp"
#include "regard/hash.hpp"
#include "regard/store.hpp"

namespace regard {

void RunConfig::merge_json(const nlohmann::json& j) {
  try {
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      seeds = s.is_string() ? parse_seed_list(s.get<std::string>()) : s.get<std::vector<std::uint64_t>>();
    }
    top_k = j.value("top_k", top_k);
    max_new_tokens = j.value("max_new_tokens", max_new_tokens);
    if (j.contains("temperature"))
      temperature = j["temperature"].is_null() ? std::nullopt : std::optional(j["temperature"].get<double>());
    concurrency = j.value("concurrency", concurrency);
    retry_attempts = j.value("retry_attempts", retry_attempts);
    if (j.contains("structure_path")) structure_path = j["structure_path"].get<std::string>();
    if (j.contains("prompt_config")) prompt_config_path = j["prompt_config"].get<std::string>();
    k = j.value("k", k);
    kl_epsilon = j.value("kl_epsilon", kl_epsilon);
    if (j.contains("robustness")) {
      const auto& r = j["robustness"];
      robustness.sample_n = r.value("sample_n", robustness.sample_n);
      robustness.n_splits = r.value("n_splits", robustness.n_splits);
      robustness.rng_seed = r.value("rng_seed", robustness.rng_seed);
      robustness.include_original = r.value("include_original", robustness.include_original);
    }
    samples_per_cell = j.value("samples_per_cell", samples_per_cell);
    sample_seed = j.value("sample_seed", sample_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"seeds", seeds},
          {"top_k", top_k},
          {"max_new_tokens", max_new_tokens},
          {"retry_attempts", retry_attempts},
          {"structure_path", structure_path.string()},
          {"prompt_config", prompt_config_path.string()},
          {"k", k},
          {"kl_epsilon", kl_epsilon},
          {"robustness",
           {{"sample_n", robustness.sample_n},
            {"n_splits", robustness.n_splits},
            {"rng_seed", robustness.rng_seed},
            {"include_original", robustness.include_original}}},
          {"samples_per_cell", samples_per_cell},
          {"sample_seed", sample_seed}};
  if (temperature) j["temperature"] = *temperature;
  return j;
}

std::string RunConfig::hash() const {
  Fnv1a h;
  h.update(to_json().dump());
  return to_hex(h.value());
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  const auto parse_one = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    if (s.empty() || std::from_chars(s.data(), end, v).ptr != end)
      throw ConfigError("bad seed '" + std::string(s) + "' in '" + std::string(text) + "'");
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto part = text.substr(start, end - start);
    if (const auto dots = part.find(".."); dots != std::string_view::npos) {
      const auto lo = parse_one(part.substr(0, dots));
      const auto hi = parse_one(part.substr(dots + 2));
      if (hi < lo) throw ConfigError("empty seed range '" + std::string(part) + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_one(part));
    }
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

RunManifest RunManifest::load_or_empty(const std::filesystem::path& run_dir) {
  RunManifest m;
  const auto p = run_dir / store_files::kManifest;
  if (std::filesystem::exists(p)) m.doc = read_json_file(p);
  return m;
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
  write_json_file(run_dir / store_files::kManifest, doc);
}

void RunManifest::set_stage(std::string_view stage, nlohmann::json fragment) {
  doc["stages"][std::string(stage)] = std::move(fragment);
}

std::vector<SkipEntry> RunManifest::skips() const {
  std::vector<SkipEntry> out;
  if (!doc.contains("stages")) return out;
  for (const auto& [_, frag] : doc["stages"].items())
    if (frag.contains("skips"))
      for (const auto& s : frag["skips"]) out.push_back(s.get<SkipEntry>());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(std::filesystem::path run_dir, RunConfig config, bool create)
    : run_dir_(std::move(run_dir)), config_(std::move(config)) {
  if (create) {
    std::filesystem::create_directories(run_dir_);
  } else if (!std::filesystem::is_directory(run_dir_)) {
    throw ConfigError("run directory " + run_dir_.string() + " does not exist");
  }
  prompt_config_ = config_.prompt_config_path.empty() ? builtin_prompt_config()
                                                      : load_prompt_config(config_.prompt_config_path);
  structures_ = load_structure_set(config_.structure_path.empty() ? default_structure_path()
                                                                  : config_.structure_path);
}

namespace {

nlohmann::json skips_json(const std::vector<SkipEntry>& skips) {
  auto arr = nlohmann::json::array();
  for (const auto& s : skips) arr.push_back(s);
  return arr;
}

std::string file_digest(const std::filesystem::path& p) {
  Fnv1a h;
  h.update(read_text_file(p));
  return to_hex(h.value());
}

void stamp_config(RunManifest& m, const RunConfig& c, const std::vector<SyntacticStructure>& s) {
  m.doc["config"] = c.to_json();
  m.doc["config_hash"] = c.hash();
  m.doc["structure_digest"] = structure_set_digest(s);
}

}  // namespace

Expansion Pipeline::paraphrase(Paraphraser& paraphraser) {
  const auto templates = build_prompt_matrix(prompt_config_.groups, prompt_config_.verb_phrases);
  auto expansion = expand_prompts(templates, structures_, paraphraser,
                                  RetryPolicy{config_.retry_attempts, {}}, config_.concurrency);
  write_jsonl(path(store_files::kPrompts), expansion.instances);

  auto manifest = RunManifest::load_or_empty(run_dir_);
  stamp_config(manifest, config_, structures_);
  manifest.set_stage("paraphrase", {{"paraphraser", paraphraser.id()},
                                    {"templates", templates.size()},
                                    {"structures", structures_.size()},
                                    {"instances", expansion.instances.size()},
                                    {"prompts_digest", file_digest(path(store_files::kPrompts))},
                                    {"skips", skips_json(expansion.skips)}});
  manifest.save(run_dir_);
  return expansion;
}

GenerationResult Pipeline::generate(Generator& generator) {
  if (!std::filesystem::exists(path(store_files::kPrompts)))
    throw ConfigError("no " + std::string(store_files::kPrompts) + " in " + run_dir_.string() +
                      "; run the paraphrase stage first");
  const auto instances = read_jsonl<PromptInstance>(path(store_files::kPrompts));
  std::vector<GenerationRecord> existing;
  if (std::filesystem::exists(path(store_files::kRecords)))
    existing = read_jsonl<GenerationRecord>(path(store_files::kRecords));
  // rewrite the resumable prefix so a torn final line cannot precede new appends
  write_jsonl(path(store_files::kRecords), existing);

  GenerationResult result;
  {
    JsonlAppender appender(path(store_files::kRecords));
    GenerationOptions opts{config_.top_k, config_.max_new_tokens, config_.concurrency,
                           RetryPolicy{config_.retry_attempts, {}}, config_.temperature};
    result = run_generation(instances, config_.seeds, generator, opts, existing,
                            [&](const GenerationRecord& r) { appender.append(nlohmann::json(r)); });
  }
  write_jsonl(path(store_files::kRecords), result.records);

  auto manifest = RunManifest::load_or_empty(run_dir_);
  stamp_config(manifest, config_, structures_);
  manifest.set_stage("generate", {{"model_id", generator.model_id()},
                                  {"prompts_digest", file_digest(path(store_files::kPrompts))},
                                  {"seeds", config_.seeds},
                                  {"top_k", config_.top_k},
                                  {"max_new_tokens", config_.max_new_tokens},
                                  {"temperature", config_.temperature ? nlohmann::json(*config_.temperature)
                                                                      : nlohmann::json(nullptr)},
                                  {"records", result.records.size()},
                                  {"records_digest", file_digest(path(store_files::kRecords))},
                                  {"skips", skips_json(result.skips)}});
  manifest.save(run_dir_);
  return result;
}

ScoringResult Pipeline::score(Scorer& scorer) {
  if (!std::filesystem::exists(path(store_files::kRecords)))
    throw ConfigError("no " + std::string(store_files::kRecords) + " in " + run_dir_.string() +
                      "; run the generate stage first");
  const auto records = read_jsonl<GenerationRecord>(path(store_files::kRecords));
  auto result = run_scoring(records, scorer,
                            ScoringOptions{config_.concurrency, RetryPolicy{config_.retry_attempts, {}}});
  write_jsonl(path(store_files::kScored), result.scored);

  auto manifest = RunManifest::load_or_empty(run_dir_);
  stamp_config(manifest, config_, structures_);
  manifest.set_stage("score", {{"scorer", scorer.id()},
                               {"records_digest", file_digest(path(store_files::kRecords))},
                               {"scored", result.scored.size()},
                               {"unscorable", result.unscorable},
                               {"scored_digest", file_digest(path(store_files::kScored))},
                               {"skips", skips_json(result.skips)}});
  manifest.save(run_dir_);

  const auto counts = reconcile();
  manifest = RunManifest::load_or_empty(run_dir_);
  auto cj = nlohmann::json::object();
  GroupCount total;
  for (const auto& [g, c] : counts) {
    cj[g] = {{"expected", c.expected}, {"scored", c.scored}, {"skipped", c.skipped}};
    total.expected += c.expected;
    total.scored += c.scored;
    total.skipped += c.skipped;
  }
  manifest.doc["counts"] = cj;
  manifest.doc["totals"] = {{"expected", total.expected}, {"scored", total.scored}, {"skipped", total.skipped}};
  manifest.save(run_dir_);
  return result;
}

std::map<std::string, GroupCount> Pipeline::reconcile() const {
  const auto manifest = RunManifest::load_or_empty(run_dir_);
  std::map<std::string, GroupCount> counts;
  const std::size_t per_group =
      prompt_config_.verb_phrases.size() * (structures_.size() + 1) * config_.seeds.size();
  for (const auto& g : prompt_config_.groups) counts[g.id].expected = per_group;
  for (const auto& r : load_scored()) counts[r.key.group_id].scored += 1;
  for (const auto& s : manifest.skips()) {
    const auto key = PromptKey::parse(s.key);
    counts[key.group_id].skipped += s.stage == Stage::paraphrase ? config_.seeds.size() : 1;
  }
  for (const auto& [g, c] : counts)
    if (c.expected != c.scored + c.skipped)
      throw DataError("group '" + g + "' does not reconcile: expected " + std::to_string(c.expected) +
                      ", scored " + std::to_string(c.scored) + ", skipped " + std::to_string(c.skipped));
  return counts;
}

std::vector<ScoredRecord> Pipeline::load_scored() const {
  if (!std::filesystem::exists(path(store_files::kScored)))
    throw ConfigError("no " + std::string(store_files::kScored) + " in " + run_dir_.string() +
                      "; run the score stage first");
  return read_jsonl<ScoredRecord>(path(store_files::kScored));
}

namespace {

std::string matrix_csv(const StructureGroupMatrix& m) {
  std::string out = "structure";
  for (const auto& g : m.group_ids()) out += "," + g + "," + g + "_n";
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += std::to_string(m.structure_ids()[r]);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const auto& cell = m.cell(r, c);
      if (cell.n == 0) {
        out += ",,0";
        continue;
      }
      std::snprintf(buf, sizeof buf, ",%.6f,%zu", cell.mean, cell.n);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string kl_csv(const KLMatrix& m) {
  std::string out = "row";
  for (const auto& g : m.groups) out += "," + g;
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < m.groups.size(); ++r) {
    out += m.groups[r];
    for (double v : m.values[r]) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace

AnalysisResult Pipeline::analyze() {
  const auto scored = load_scored();
  auto result = regard::analyze(scored, prompt_config_.groups, AnalysisOptions{config_.k, config_.kl_epsilon});
  write_json_file(path(store_files::kAnalysis), nlohmann::json(result));
  write_text_file(path("per_structure_means.csv"), matrix_csv(result.per_structure_means));
  write_text_file(path("kl_matrix.csv"), kl_csv(result.kl_matrix));

  auto manifest = RunManifest::load_or_empty(run_dir_);
  stamp_config(manifest, config_, structures_);
  manifest.set_stage("analyze", {{"scored_digest", file_digest(path(store_files::kScored))},
                                 {"k", config_.k},
                                 {"kl_epsilon", config_.kl_epsilon},
                                 {"empty_cells", result.per_structure_means.empty_cells().size()}});
  manifest.save(run_dir_);
  return result;
}

RobustnessReport Pipeline::robustness() {
  const auto scored = load_scored();
  std::vector<std::string> order;
  for (const auto& g : prompt_config_.groups) order.push_back(g.id);
  auto report = regard::robustness(scored, order, config_.robustness);
  write_json_file(path(store_files::kRobustness), nlohmann::json(report));

  auto manifest = RunManifest::load_or_empty(run_dir_);
  stamp_config(manifest, config_, structures_);
  manifest.set_stage("robustness", {{"scored_digest", file_digest(path(store_files::kScored))},
                                    {"sample_n", config_.robustness.sample_n},
                                    {"n_splits", config_.robustness.n_splits},
                                    {"rng_seed", config_.robustness.rng_seed},
                                    {"include_original", config_.robustness.include_original}});
  manifest.save(run_dir_);
  return report;
}

ReportBundle Pipeline::report(const std::filesystem::path& out_dir) {
  ReportBundle bundle;
  if (std::filesystem::exists(path(store_files::kAnalysis)))
    bundle.analysis = read_json_file(path(store_files::kAnalysis)).get<AnalysisResult>();
  if (std::filesystem::exists(path(store_files::kRobustness)))
    bundle.robustness = read_json_file(path(store_files::kRobustness)).get<RobustnessReport>();
  if (std::filesystem::exists(path(store_files::kScored))) {
    std::vector<std::string> order;
    for (const auto& g : prompt_config_.groups) order.push_back(g.id);
    bundle.samples = sample_dump(load_scored(), config_.samples_per_cell, config_.sample_seed, order);
  }
  auto manifest = RunManifest::load_or_empty(run_dir_);
  if (!manifest.doc.empty()) bundle.manifest = manifest.doc;
  for (const auto& s : structures_) bundle.structure_text[s.id] = s.linearized;

  const auto dir = out_dir.empty() ? run_dir_ / "report" : out_dir;
  const auto files = write_report(bundle, dir);

  manifest.set_stage("report", {{"samples_per_cell", config_.samples_per_cell},
                                {"sample_seed", config_.sample_seed},
                                {"files", files}});
  manifest.save(run_dir_);
  return bundle;
}

}  // namespace regard
