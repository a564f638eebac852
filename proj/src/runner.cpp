#include "regard/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "regard/error.hpp"

namespace regard {

std::string_view to_string(PromptKind kind) {
  return kind == PromptKind::original ? "original" : "paraphrased";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::paraphrase: return "paraphrase";
    case Stage::generate: return "generate";
    case Stage::score: return "score";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  if (text == "paraphrase") return Stage::paraphrase;
  if (text == "generate") return Stage::generate;
  if (text == "score") return Stage::score;
  throw DataError("unknown stage '" + std::string(text) + "'");
}

std::string GenerationRecord::record_key() const {
  return key.str() + "#" + std::to_string(seed);
}

namespace {

template <typename R>
void sort_by_key_seed(std::vector<R>& records) {
  std::sort(records.begin(), records.end(), [](const R& a, const R& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.seed < b.seed;
  });
}

}  // namespace

void sort_records(std::vector<GenerationRecord>& records) { sort_by_key_seed(records); }
void sort_records(std::vector<ScoredRecord>& records) { sort_by_key_seed(records); }

void parallel_for(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------

Expansion expand_prompts(const std::vector<PromptTemplate>& templates,
                         const std::vector<SyntacticStructure>& structures, Paraphraser& paraphraser,
                         const RetryPolicy& retry, std::size_t concurrency) {
  if (templates.empty()) throw ConfigError("expand_prompts needs at least one template");
  const std::size_t per_template = structures.size() + 1;

  // slot i covers template i / per_template, structure i % per_template - 1
  std::vector<std::optional<PromptInstance>> slots(templates.size() * per_template);
  std::vector<std::optional<SkipEntry>> skips(slots.size());

  parallel_for(slots.size(), concurrency, [&](std::size_t i) {
    const PromptTemplate& t = templates[i / per_template];
    const std::size_t s = i % per_template;
    if (s == 0) {
      slots[i] = PromptInstance{{t.group_id, t.vp_id, kOriginalStructure}, t.text};
      return;
    }
    const SyntacticStructure& structure = structures[s - 1];
    const PromptKey key{t.group_id, t.vp_id, structure.id};
    std::string failure;
    auto result = with_retries(retry, [&] { return paraphraser.paraphrase(t, structure); }, failure);
    if (!result) {
      skips[i] = SkipEntry{Stage::paraphrase, key.str(), std::nullopt, "transport: " + failure};
    } else if (!*result || (*result)->empty()) {
      skips[i] = SkipEntry{Stage::paraphrase, key.str(), std::nullopt, "paraphrase refused"};
    } else {
      slots[i] = PromptInstance{key, std::move(**result)};
    }
  });

  Expansion out;
  for (auto& slot : slots)
    if (slot) out.instances.push_back(std::move(*slot));
  for (auto& skip : skips)
    if (skip) out.skips.push_back(std::move(*skip));
  return out;
}

// ---------------------------------------------------------------------------

GenerationResult run_generation(const std::vector<PromptInstance>& instances,
                                const std::vector<std::uint64_t>& seeds, Generator& generator,
                                const GenerationOptions& options,
                                const std::vector<GenerationRecord>& existing,
                                const RecordSink& sink) {
  if (seeds.empty()) throw ConfigError("run_generation needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (options.top_k < 1) throw ConfigError("top_k must be positive");
  if (options.max_new_tokens < 1) throw ConfigError("max_new_tokens must be positive");
  if (options.temperature && !(*options.temperature > 0.0)) throw ConfigError("temperature must be positive");

  std::unordered_set<std::string> wanted;
  wanted.reserve(instances.size() * seeds.size());
  for (const auto& inst : instances)
    for (auto seed : seeds) wanted.insert(inst.key.str() + "#" + std::to_string(seed));

  GenerationResult out;
  std::unordered_set<std::string> done;
  for (const auto& rec : existing) {
    const auto rk = rec.record_key();
    if (wanted.count(rk) == 0 || !done.insert(rk).second) continue;
    out.records.push_back(rec);
  }
  out.resumed = out.records.size();

  struct Job {
    const PromptInstance* instance;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& inst : instances)
    for (auto seed : seeds)
      if (done.count(inst.key.str() + "#" + std::to_string(seed)) == 0) jobs.push_back({&inst, seed});

  std::vector<std::optional<GenerationRecord>> produced(jobs.size());
  std::vector<std::optional<SkipEntry>> skipped(jobs.size());
  std::atomic<std::size_t> calls{0};
  std::mutex sink_mutex;
  const std::string model_id = generator.model_id();

  parallel_for(jobs.size(), options.concurrency, [&](std::size_t i) {
    const Job& job = jobs[i];
    GenerationRequest req{job.instance->text, job.seed, options.top_k, options.max_new_tokens,
                          job.instance->key, options.temperature};
    std::string failure;
    auto text = with_retries(
        options.retry,
        [&] {
          calls.fetch_add(1, std::memory_order_relaxed);
          return generator.generate(req);
        },
        failure);
    if (!text) {
      skipped[i] = SkipEntry{Stage::generate, job.instance->key.str(), job.seed, "transport: " + failure};
      return;
    }
    GenerationRecord rec{job.instance->key, job.seed, job.instance->text, std::move(*text), model_id};
    if (sink) {
      std::lock_guard lock(sink_mutex);
      sink(rec);
    }
    produced[i] = std::move(rec);
  });

  for (auto& p : produced)
    if (p) out.records.push_back(std::move(*p));
  for (auto& s : skipped)
    if (s) out.skips.push_back(std::move(*s));
  sort_records(out.records);
  std::sort(out.skips.begin(), out.skips.end());
  out.generator_calls = calls.load();
  return out;
}

// ---------------------------------------------------------------------------

ScoringResult run_scoring(const std::vector<GenerationRecord>& records, Scorer& scorer,
                          const ScoringOptions& options) {
  std::vector<std::optional<ScoredRecord>> scored(records.size());
  std::vector<std::optional<SkipEntry>> skipped(records.size());

  parallel_for(records.size(), options.concurrency, [&](std::size_t i) {
    const GenerationRecord& rec = records[i];
    const auto is_blank = rec.generated_text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (is_blank) {
      skipped[i] = SkipEntry{Stage::score, rec.key.str(), rec.seed, "empty completion"};
      return;
    }
    std::string failure;
    auto result = with_retries(options.retry, [&] { return scorer.score(rec.generated_text); }, failure);
    if (!result) {
      skipped[i] = SkipEntry{Stage::score, rec.key.str(), rec.seed, "transport: " + failure};
      return;
    }
    ScoredRecord out;
    static_cast<GenerationRecord&>(out) = rec;
    out.label = result->label;
    out.score = regard_score(result->label);
    out.unscorable = result->unscorable;
    scored[i] = std::move(out);
  });

  ScoringResult out;
  for (auto& s : scored) {
    if (!s) continue;
    if (s->unscorable) ++out.unscorable;
    out.scored.push_back(std::move(*s));
  }
  for (auto& s : skipped)
    if (s) out.skips.push_back(std::move(*s));
  sort_records(out.scored);
  std::sort(out.skips.begin(), out.skips.end());
  return out;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PromptInstance& v) {
  j = {{"prompt_id", v.key.str()}, {"kind", to_string(v.kind())}, {"text", v.text}};
}

void from_json(const nlohmann::json& j, PromptInstance& v) {
  v.key = PromptKey::parse(j.at("prompt_id").get<std::string>());
  v.text = j.at("text").get<std::string>();
  if (j.contains("kind") && j["kind"].get<std::string>() != to_string(v.kind()))
    throw DataError("prompt " + v.key.str() + " has inconsistent kind");
}

void to_json(nlohmann::json& j, const GenerationRecord& v) {
  j = {{"prompt_id", v.key.str()},
       {"seed", v.seed},
       {"prompt_text", v.prompt_text},
       {"generated_text", v.generated_text},
       {"model_id", v.model_id}};
}

void from_json(const nlohmann::json& j, GenerationRecord& v) {
  v.key = PromptKey::parse(j.at("prompt_id").get<std::string>());
  v.seed = j.at("seed").get<std::uint64_t>();
  v.prompt_text = j.at("prompt_text").get<std::string>();
  v.generated_text = j.at("generated_text").get<std::string>();
  v.model_id = j.at("model_id").get<std::string>();
}

void to_json(nlohmann::json& j, const ScoredRecord& v) {
  to_json(j, static_cast<const GenerationRecord&>(v));
  j["label"] = to_string(v.label);
  j["score"] = v.score;
  if (v.unscorable) j["unscorable"] = true;
}

void from_json(const nlohmann::json& j, ScoredRecord& v) {
  from_json(j, static_cast<GenerationRecord&>(v));
  v.label = parse_regard_label(j.at("label").get<std::string>());
  v.score = j.at("score").get<int>();
  v.unscorable = j.value("unscorable", false);
  if (v.score != regard_score(v.label))
    throw DataError("record " + v.record_key() + " has score inconsistent with its label");
}

void to_json(nlohmann::json& j, const SkipEntry& v) {
  j = {{"stage", to_string(v.stage)}, {"key", v.key}, {"reason", v.reason}};
  if (v.seed) j["seed"] = *v.seed;
}

void from_json(const nlohmann::json& j, SkipEntry& v) {
  v.stage = parse_stage(j.at("stage").get<std::string>());
  v.key = j.at("key").get<std::string>();
  v.reason = j.at("reason").get<std::string>();
  v.seed = j.contains("seed") ? std::optional(j["seed"].get<std::uint64_t>()) : std::nullopt;
}

}  // namespace regard
