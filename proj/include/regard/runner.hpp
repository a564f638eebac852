#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/ports.hpp"
#include "regard/prompt.hpp"
#include "regard/syntax.hpp"

namespace regard {

enum class PromptKind { original, paraphrased };

std::string_view to_string(PromptKind kind);

struct PromptInstance {
  PromptKey key;
  std::string text;

  PromptKind kind() const { return key.is_original() ? PromptKind::original : PromptKind::paraphrased; }
  bool operator==(const PromptInstance&) const = default;
};

struct GenerationRecord {
  PromptKey key;
  std::uint64_t seed = 0;
  std::string prompt_text;
  std::string generated_text;
  std::string model_id;

  // "<prompt key>#<seed>", unique within a run.
  std::string record_key() const;
  bool operator==(const GenerationRecord&) const = default;
};

struct ScoredRecord : GenerationRecord {
  RegardLabel label = RegardLabel::neutral;
  int score = 0;          // regard_score(label)
  bool unscorable = false;  // scorer could not decide; label defaulted to neutral

  bool operator==(const ScoredRecord&) const = default;
};

enum class Stage { paraphrase, generate, score };
std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

// Work that was dropped. A paraphrase skip has no seed and removes the
// instance from every seed; generate and score skips remove one record.
struct SkipEntry {
  Stage stage = Stage::generate;
  std::string key;
  std::optional<std::uint64_t> seed;
  std::string reason;

  bool operator==(const SkipEntry&) const = default;
  auto operator<=>(const SkipEntry&) const = default;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{0};  // doubled after each failed attempt
};

// Runs fn until it returns or throws something other than TransportError, at
// most policy.max_attempts times. The last TransportError message is
// returned as the failure.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn, std::string& failure)
    -> std::optional<decltype(fn())>;

// Sorted by (key, seed).
void sort_records(std::vector<GenerationRecord>& records);
void sort_records(std::vector<ScoredRecord>& records);

// ---------------------------------------------------------------------------
// expand_prompts
// ---------------------------------------------------------------------------

struct Expansion {
  std::vector<PromptInstance> instances;
  std::vector<SkipEntry> skips;
};

// For each template: the original instance, then one per structure in id
// order. Paraphraser refusals, empty output and exhausted retries become
// skips; they never abort the expansion.
Expansion expand_prompts(const std::vector<PromptTemplate>& templates,
                         const std::vector<SyntacticStructure>& structures, Paraphraser& paraphraser,
                         const RetryPolicy& retry = {}, std::size_t concurrency = 1);

// ---------------------------------------------------------------------------
// run_generation
// ---------------------------------------------------------------------------

struct GenerationOptions {
  int top_k = 40;
  int max_new_tokens = 40;
  std::size_t concurrency = 4;
  RetryPolicy retry;
  std::optional<double> temperature;
};

struct GenerationResult {
  std::vector<GenerationRecord> records;  // sorted
  std::vector<SkipEntry> skips;           // sorted
  std::size_t generator_calls = 0;        // requests issued, retries included
  std::size_t resumed = 0;                // records taken from `existing`
};

// Called once per completed record, serialized by the runner. Used to
// persist incrementally.
using RecordSink = std::function<void(const GenerationRecord&)>;

// One record per (instance, seed). Pairs already present in `existing` are
// reused without calling the generator. Throws ConfigError if seeds are
// empty or repeated.
GenerationResult run_generation(const std::vector<PromptInstance>& instances,
                                const std::vector<std::uint64_t>& seeds, Generator& generator,
                                const GenerationOptions& options = {},
                                const std::vector<GenerationRecord>& existing = {},
                                const RecordSink& sink = {});

// ---------------------------------------------------------------------------
// run_scoring
// ---------------------------------------------------------------------------

struct ScoringOptions {
  std::size_t concurrency = 4;
  RetryPolicy retry;
};

struct ScoringResult {
  std::vector<ScoredRecord> scored;  // sorted
  std::vector<SkipEntry> skips;      // sorted
  std::size_t unscorable = 0;
};

// Empty completions are skipped with reason "empty completion"; scorer
// failures are retried, then skipped.
ScoringResult run_scoring(const std::vector<GenerationRecord>& records, Scorer& scorer,
                          const ScoringOptions& options = {});

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

// Invokes fn(i) for i in [0, n) on up to `concurrency` threads. The first
// exception thrown by fn is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// JSON forms used by the run store
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PromptInstance& v);
void from_json(const nlohmann::json& j, PromptInstance& v);
void to_json(nlohmann::json& j, const GenerationRecord& v);
void from_json(const nlohmann::json& j, GenerationRecord& v);
void to_json(nlohmann::json& j, const ScoredRecord& v);
void from_json(const nlohmann::json& j, ScoredRecord& v);
void to_json(nlohmann::json& j, const SkipEntry& v);
void from_json(const nlohmann::json& j, SkipEntry& v);

}  // namespace regard

#include "regard/runner_impl.hpp"
