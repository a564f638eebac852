// regard-audit: prompt expansion, generation, regard scoring and bias
// statistics for text generators.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "regard/annotate.hpp"
#include "regard/error.hpp"
#include "regard/http_ports.hpp"
#include "regard/pipeline.hpp"
#include "regard/report.hpp"
#include "regard/store.hpp"

namespace {

using namespace regard;

enum class Backend { mock, http };

struct CommandConfig {
  std::string run_dir;
  std::string config_path;
  std::string structures;
  std::string prompt_config;
  std::string seeds;
  std::optional<int> top_k;
  std::optional<int> max_new_tokens;
  std::optional<double> temperature;
  std::optional<std::size_t> concurrency;
  std::optional<int> retries;
  std::string backend = "mock";
  std::string mock_profile;
  std::string gen_url;
  std::string para_url;
  std::string score_url;
  std::string scorer;  // marker | lexicon | http; empty: per backend
  std::string model_id = "gpt2";

  // robustness
  std::optional<std::size_t> sample_n;
  std::optional<std::size_t> n_splits;
  std::optional<std::uint64_t> rng_seed;
  bool include_original = false;

  // report / annotate
  std::string out;
  std::optional<std::size_t> samples_per_cell;
  std::optional<std::uint64_t> sample_seed;
  std::string annotator;
  std::string label_filter;
  std::vector<std::string> annotation_files;
};

Backend backend_of(const CommandConfig& c) {
  if (c.backend == "mock") return Backend::mock;
  if (c.backend == "http") return Backend::http;
  throw ConfigError("--backend must be 'mock' or 'http'");
}

std::string endpoint_for(const std::string& flag, const char* env, const char* what) {
  if (!flag.empty()) return flag;
  if (const char* v = std::getenv(env); v != nullptr && *v != '\0') return v;
  throw ConfigError(std::string("http backend needs a ") + what + " endpoint (--" + what +
                    "-url or " + env + ")");
}

void reject_urls_in_mock(const CommandConfig& c) {
  if (!c.gen_url.empty() || !c.para_url.empty() || !c.score_url.empty())
    throw ConfigError("endpoint URLs given with --backend mock; pass --backend http to use them");
}

RunConfig build_run_config(const CommandConfig& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg.merge_json(read_json_file(c.config_path));
  if (!c.seeds.empty()) cfg.seeds = parse_seed_list(c.seeds);
  if (c.top_k) cfg.top_k = *c.top_k;
  if (c.max_new_tokens) cfg.max_new_tokens = *c.max_new_tokens;
  if (c.temperature) cfg.temperature = *c.temperature;
  if (c.concurrency) cfg.concurrency = *c.concurrency;
  if (c.retries) cfg.retry_attempts = *c.retries;
  if (!c.structures.empty()) cfg.structure_path = c.structures;
  if (!c.prompt_config.empty()) cfg.prompt_config_path = c.prompt_config;
  if (c.sample_n) cfg.robustness.sample_n = *c.sample_n;
  if (c.n_splits) cfg.robustness.n_splits = *c.n_splits;
  if (c.rng_seed) cfg.robustness.rng_seed = *c.rng_seed;
  if (c.include_original) cfg.robustness.include_original = true;
  if (c.samples_per_cell) cfg.samples_per_cell = *c.samples_per_cell;
  if (c.sample_seed) cfg.sample_seed = *c.sample_seed;
  return cfg;
}

std::unique_ptr<Paraphraser> make_paraphraser(const CommandConfig& c) {
  if (backend_of(c) == Backend::mock) {
    reject_urls_in_mock(c);
    return std::make_unique<IdentityParaphraser>();
  }
  return std::make_unique<HttpParaphraser>(
      Endpoint::parse(endpoint_for(c.para_url, "REGARD_AUDIT_PARA_URL", "para")));
}

std::unique_ptr<Generator> make_generator(const CommandConfig& c) {
  if (backend_of(c) == Backend::mock) {
    reject_urls_in_mock(c);
    return std::make_unique<MockGenerator>(c.mock_profile.empty() ? MockProfile::reference()
                                                                  : MockProfile::load(c.mock_profile));
  }
  if (!c.mock_profile.empty()) throw ConfigError("--mock cannot be combined with --backend http");
  return std::make_unique<HttpGenerator>(
      Endpoint::parse(endpoint_for(c.gen_url, "REGARD_AUDIT_GEN_URL", "gen")), c.model_id);
}

std::unique_ptr<Scorer> make_scorer(const CommandConfig& c) {
  const Backend b = backend_of(c);
  if (b == Backend::mock) reject_urls_in_mock(c);
  const std::string kind = !c.scorer.empty() ? c.scorer : (b == Backend::mock ? "marker" : "http");
  if (kind == "marker") return std::make_unique<MarkerScorer>();
  if (kind == "lexicon") return std::make_unique<LexiconScorer>();
  if (kind == "http") {
    if (b != Backend::http) throw ConfigError("--scorer http requires --backend http");
    return std::make_unique<HttpScorer>(
        Endpoint::parse(endpoint_for(c.score_url, "REGARD_AUDIT_SCORE_URL", "score")));
  }
  throw ConfigError("--scorer must be marker, lexicon or http");
}

// --mock implies the mock backend when --backend was not given.
void normalize(CommandConfig& c, const CLI::App& app) {
  if (!c.mock_profile.empty() && app.get_option("--backend")->count() == 0) c.backend = "mock";
}

Pipeline open_run(const CommandConfig& c, bool create) {
  if (c.run_dir.empty()) throw ConfigError("--run-dir is required");
  return Pipeline(c.run_dir, build_run_config(c), create);
}

void print_expansion(const Expansion& e) {
  std::cerr << "prompts: " << e.instances.size() << " instances, " << e.skips.size() << " skipped\n";
}

void print_generation(const GenerationResult& g) {
  std::cerr << "generate: " << g.records.size() << " records (" << g.resumed << " resumed, "
            << g.generator_calls << " generator calls), " << g.skips.size() << " skipped\n";
}

void print_scoring(const ScoringResult& s) {
  std::cerr << "score: " << s.scored.size() << " scored, " << s.unscorable << " unscorable, "
            << s.skips.size() << " skipped\n";
}

void print_robustness(const RobustnessReport& r) {
  std::printf("fixed_structure_similarity=%.4f\nsplit_half_similarity=%.4f\n",
              r.fixed_structure_similarity, r.split_half_similarity);
}

void print_analysis(const AnalysisResult& a) {
  for (const auto& [g, v] : a.score_general) std::printf("score_general %-10s %+.4f\n", g.c_str(), v);
  for (const auto& gap : a.pairwise_gap.at("paraphrased_only"))
    std::printf("gap %-12s %+.4f\n", std::string(to_string(gap.axis)).c_str(), gap.gap);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit demographic regard bias of text generators across paraphrased prompts"};
  app.require_subcommand(1);
  CommandConfig c;

  const auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--run-dir,-d", c.run_dir, "Run directory")->required();
    sub->add_option("--config", c.config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--structures", c.structures, "Structure file (<source>\\t<parse> per line)")
        ->check(CLI::ExistingFile);
    sub->add_option("--prompt-config", c.prompt_config, "JSON override for groups / verb phrases")
        ->check(CLI::ExistingFile);
    sub->add_option("--seeds", c.seeds, "Seeds, e.g. 0..9 or 1,5,9");
    sub->add_option("--top-k", c.top_k, "Top-k for generation (default 40)");
    sub->add_option("--max-new-tokens", c.max_new_tokens, "Generation length (default 40)");
    sub->add_option("--temperature", c.temperature, "Sampling temperature sent to --gen-url (default: unset)");
    sub->add_option("--concurrency,-j", c.concurrency, "Concurrent port calls (default 4)");
    sub->add_option("--retries", c.retries, "Attempts per remote call (default 3)");
  };
  const auto add_backend_options = [&](CLI::App* sub) {
    sub->add_option("--backend", c.backend, "mock or http")->capture_default_str();
    sub->add_option("--mock", c.mock_profile, "Mock profile JSON (implies --backend mock)")
        ->check(CLI::ExistingFile);
    sub->add_option("--gen-url", c.gen_url, "Generator endpoint (env REGARD_AUDIT_GEN_URL)");
    sub->add_option("--para-url", c.para_url, "Paraphraser endpoint (env REGARD_AUDIT_PARA_URL)");
    sub->add_option("--score-url", c.score_url, "Scorer endpoint (env REGARD_AUDIT_SCORE_URL)");
    sub->add_option("--scorer", c.scorer, "marker, lexicon or http");
    sub->add_option("--model-id", c.model_id, "Model id recorded for HTTP generation")
        ->capture_default_str();
  };
  const auto add_robustness_options = [&](CLI::App* sub) {
    sub->add_option("--sample-n", c.sample_n, "Structures sampled for the fixed estimate (default 10)");
    sub->add_option("--splits", c.n_splits, "Random half splits (default 10)");
    sub->add_option("--rng-seed", c.rng_seed, "RNG seed (default 0)");
    sub->add_flag("--include-original", c.include_original, "Treat the original prompt as a structure");
  };
  const auto add_report_options = [&](CLI::App* sub) {
    sub->add_option("--samples-per-cell", c.samples_per_cell, "Samples per (group, label) (default 2)");
    sub->add_option("--sample-seed", c.sample_seed, "Sample RNG seed (default 0)");
  };

  auto* prompts = app.add_subcommand("prompts", "Print the prompt template matrix");
  prompts->add_option("--prompt-config", c.prompt_config, "JSON override for groups / verb phrases")
      ->check(CLI::ExistingFile);

  auto* paraphrase = app.add_subcommand("paraphrase", "Expand templates over the structure set");
  add_run_options(paraphrase);
  add_backend_options(paraphrase);

  auto* generate = app.add_subcommand("generate", "Generate continuations for every prompt and seed");
  add_run_options(generate);
  add_backend_options(generate);

  auto* score = app.add_subcommand("score", "Score generations for regard");
  add_run_options(score);
  add_backend_options(score);

  auto* analyze = app.add_subcommand("analyze", "Compute group, gap, KL and structure statistics");
  add_run_options(analyze);

  auto* robust = app.add_subcommand("robustness", "Single-structure vs split-half cosine similarity");
  add_run_options(robust);
  add_robustness_options(robust);

  auto* report = app.add_subcommand("report", "Render markdown, JSON and CSV reports");
  add_run_options(report);
  add_report_options(report);
  report->add_option("--out,-o", c.out, "Output directory (default <run-dir>/report)");

  auto* annotate = app.add_subcommand("annotate", "Judge sampled predicted labels interactively");
  add_run_options(annotate);
  add_report_options(annotate);
  annotate->add_option("--annotator", c.annotator, "Annotator id")->required();
  annotate->add_option("--out,-o", c.out, "Annotation file (default <run-dir>/annotations/<id>.json)");
  annotate->add_option("--label", c.label_filter, "Only sample this predicted label");

  auto* kappa = app.add_subcommand("kappa", "Accuracy and Fleiss kappa from annotation files");
  kappa->add_option("files", c.annotation_files, "Annotation JSON files")
      ->required()
      ->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Full pipeline: paraphrase, generate, score, analyze, report");
  add_run_options(run);
  add_backend_options(run);
  add_robustness_options(run);
  add_report_options(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prompts->parsed()) {
      const PromptConfig pc = c.prompt_config.empty() ? builtin_prompt_config()
                                                      : load_prompt_config(c.prompt_config);
      for (const auto& t : build_prompt_matrix(pc.groups, pc.verb_phrases))
        std::cout << t.group_id << '\t' << t.vp_id << '\t' << t.text << '\n';
    } else if (paraphrase->parsed()) {
      auto paraphraser = make_paraphraser(c);
      auto p = open_run(c, true);
      print_expansion(p.paraphrase(*paraphraser));
    } else if (generate->parsed()) {
      normalize(c, *generate);
      auto generator = make_generator(c);
      auto p = open_run(c, false);
      print_generation(p.generate(*generator));
    } else if (score->parsed()) {
      auto scorer = make_scorer(c);
      auto p = open_run(c, false);
      print_scoring(p.score(*scorer));
    } else if (analyze->parsed()) {
      auto p = open_run(c, false);
      print_analysis(p.analyze());
    } else if (robust->parsed()) {
      auto p = open_run(c, false);
      print_robustness(p.robustness());
    } else if (report->parsed()) {
      auto p = open_run(c, false);
      p.report(c.out);
      std::cerr << "report written to " << (c.out.empty() ? p.run_dir() / "report" : std::filesystem::path(c.out)) << "\n";
    } else if (annotate->parsed()) {
      auto p = open_run(c, false);
      std::vector<std::string> order;
      for (const auto& g : p.groups()) order.push_back(g.id);
      std::optional<RegardLabel> filter;
      if (!c.label_filter.empty()) filter = parse_regard_label(c.label_filter);
      const auto dump = sample_dump(p.load_scored(), p.config().samples_per_cell, p.config().sample_seed,
                                    order, filter);
      std::vector<ScoredRecord> sample;
      const auto scored = p.load_scored();
      for (const auto& row : dump.rows)
        for (const auto& r : scored)
          if (r.record_key() == row.record_key) sample.push_back(r);
      const auto judged = annotate_interactive(sample, c.annotator, std::cin, std::cout);
      std::filesystem::path out = c.out;
      if (out.empty()) {
        std::filesystem::create_directories(p.run_dir() / "annotations");
        out = p.run_dir() / "annotations" / (c.annotator + ".json");
      }
      save_annotations(out, judged);
      std::cerr << judged.size() << " judgments written to " << out << "\n";
    } else if (kappa->parsed()) {
      std::vector<std::filesystem::path> files(c.annotation_files.begin(), c.annotation_files.end());
      const auto s = summarize_agreement(load_annotations(files));
      std::printf("items=%zu\nannotators=%zu\n", s.items, s.annotators);
      for (const auto& [id, acc] : s.per_annotator) std::printf("accuracy[%s]=%.4f\n", id.c_str(), acc);
      std::printf("accuracy=%.4f\n\xce\xba=%.3f\n", s.accuracy, s.kappa);
    } else if (run->parsed()) {
      normalize(c, *run);
      auto paraphraser = make_paraphraser(c);
      auto generator = make_generator(c);
      auto scorer = make_scorer(c);
      auto p = open_run(c, true);
      print_expansion(p.paraphrase(*paraphraser));
      print_generation(p.generate(*generator));
      print_scoring(p.score(*scorer));
      print_analysis(p.analyze());
      print_robustness(p.robustness());
      p.report(c.out);
      std::cerr << "report written to " << (c.out.empty() ? p.run_dir() / "report" : std::filesystem::path(c.out)) << "\n";
    }
  } catch (const regard::Error& e) {
    std::cerr << "regard-audit: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "regard-audit: unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
