#include <doctest.h>

#include <atomic>
#include <mutex>
#include <set>

#include "regard/error.hpp"
#include "regard/runner.hpp"

using namespace regard;

namespace {

const std::vector<SyntacticStructure>& structures() {
  static const auto set = load_structure_set(default_structure_path());
  return set;
}

std::vector<PromptTemplate> templates() { return build_prompt_matrix(builtin_groups(), builtin_verb_phrases()); }

std::vector<std::uint64_t> seeds(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
  return out;
}

// Throws TransportError for two chosen (template, structure) pairs every time.
class FailingParaphraser final : public Paraphraser {
 public:
  std::optional<std::string> paraphrase(const PromptTemplate& t, const SyntacticStructure& s) override {
    ++calls;
    if ((t.group_id == "woman" && t.vp_id == "worked_as" && s.id == 3) ||
        (t.group_id == "gay" && t.vp_id == "was_known_for" && s.id == 99))
      throw TransportError("connection reset");
    return t.text;
  }
  std::string id() const override { return "failing"; }
  std::atomic<int> calls{0};
};

class RefusingParaphraser final : public Paraphraser {
 public:
  std::optional<std::string> paraphrase(const PromptTemplate& t, const SyntacticStructure& s) override {
    if (s.id == 0) return std::nullopt;
    if (s.id == 1) return std::string{};
    return t.text + " #" + std::to_string(s.id);
  }
  std::string id() const override { return "refusing"; }
};

// Fails the first attempt of every request, then succeeds.
class FlakyGenerator final : public Generator {
 public:
  std::string generate(const GenerationRequest& r) override {
    std::lock_guard lock(mu_);
    if (seen_.insert(r.key.str() + "#" + std::to_string(r.seed)).second) throw TransportError("timeout");
    return "text for " + r.prompt_text;
  }
  std::string model_id() const override { return "flaky"; }

 private:
  std::mutex mu_;
  std::set<std::string> seen_;
};

class DeadGenerator final : public Generator {
 public:
  std::string generate(const GenerationRequest&) override { throw TransportError("down"); }
  std::string model_id() const override { return "dead"; }
};

class BrokenGenerator final : public Generator {
 public:
  std::string generate(const GenerationRequest&) override { throw std::logic_error("bug"); }
  std::string model_id() const override { return "broken"; }
};

}  // namespace

TEST_CASE("expansion covers every template and structure") {
  IdentityParaphraser identity;
  const auto e = expand_prompts(templates(), structures(), identity, {}, 4);
  CHECK(e.instances.size() == 6060);
  CHECK(e.skips.empty());
  CHECK(e.instances[0].kind() == PromptKind::original);
  CHECK(e.instances[0].key.str() == "man|worked_as|orig");
  CHECK(e.instances[1].key.structure_id == 0);
  CHECK(e.instances[101].kind() == PromptKind::original);
  for (std::size_t i = 1; i < e.instances.size(); ++i) {
    const auto& prev = e.instances[i - 1].key;
    const auto& cur = e.instances[i].key;
    if (prev.group_id == cur.group_id && prev.vp_id == cur.vp_id) CHECK(prev.structure_id < cur.structure_id);
  }

  const auto single = expand_prompts({templates()[0]}, {}, identity);
  REQUIRE(single.instances.size() == 1);
  CHECK(single.instances[0].kind() == PromptKind::original);
  CHECK_THROWS_AS(expand_prompts({}, structures(), identity), ConfigError);
}

TEST_CASE("paraphrase failures become skips") {
  FailingParaphraser failing;
  const auto e = expand_prompts(templates(), structures(), failing, RetryPolicy{3, {}}, 8);
  CHECK(e.instances.size() == 6058);
  REQUIRE(e.skips.size() == 2);
  // template order: woman prompts precede gay prompts
  CHECK(e.skips[0].key == "woman|worked_as|s003");
  CHECK(e.skips[1].key == "gay|was_known_for|s099");
  CHECK(e.skips[0].stage == Stage::paraphrase);
  CHECK_FALSE(e.skips[0].seed.has_value());
  CHECK(e.skips[0].reason == "transport: connection reset");
  CHECK(failing.calls == 6000 - 2 + 2 * 3);

  RefusingParaphraser refusing;
  const auto r = expand_prompts({templates()[0]}, structures(), refusing);
  CHECK(r.instances.size() == 99);
  REQUIRE(r.skips.size() == 2);
  CHECK(r.skips[0].reason == "paraphrase refused");
  CHECK(r.skips[1].reason == "paraphrase refused");
}

TEST_CASE("expansion does not depend on concurrency") {
  IdentityParaphraser identity;
  const auto a = expand_prompts(templates(), structures(), identity, {}, 1);
  const auto b = expand_prompts(templates(), structures(), identity, {}, 16);
  CHECK(a.instances == b.instances);
}

TEST_CASE("generation makes one record per instance and seed") {
  IdentityParaphraser identity;
  const auto e = expand_prompts(templates(), structures(), identity);
  MockGenerator gen(MockProfile::reference());

  std::size_t sunk = 0;
  const auto full = run_generation(e.instances, seeds(10), gen, {}, {}, [&](const GenerationRecord&) { ++sunk; });
  CHECK(full.records.size() == 60600);
  CHECK(full.generator_calls == 60600);
  CHECK(sunk == 60600);
  CHECK(full.skips.empty());

  std::set<std::string> keys;
  for (const auto& r : full.records) keys.insert(r.record_key());
  CHECK(keys.size() == 60600);

  SUBCASE("resume issues no calls") {
    const auto again = run_generation(e.instances, seeds(10), gen, {}, full.records);
    CHECK(again.generator_calls == 0);
    CHECK(again.resumed == 60600);
    CHECK(again.records == full.records);
  }
  SUBCASE("partial resume fills the gap") {
    std::vector<GenerationRecord> half(full.records.begin(), full.records.begin() + 30000);
    half.push_back(full.records[5]);  // a duplicate is ignored
    const auto again = run_generation(e.instances, seeds(10), gen, {}, half);
    CHECK(again.generator_calls == 30600);
    CHECK(again.resumed == 30000);
    CHECK(again.records == full.records);
  }
  SUBCASE("completion order does not matter") {
    GenerationOptions serial;
    serial.concurrency = 1;
    GenerationOptions wide;
    wide.concurrency = 12;
    CHECK(run_generation(e.instances, seeds(10), gen, serial).records ==
          run_generation(e.instances, seeds(10), gen, wide).records);
  }
}

TEST_CASE("generation edge cases") {
  const std::vector<PromptInstance> one{PromptInstance{{"man", "worked_as", kOriginalStructure}, "the man worked as"}};
  MockGenerator gen(MockProfile::reference());
  const auto r = run_generation(one, {5}, gen);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].seed == 5);
  CHECK(r.records[0].model_id == "mock");
  CHECK(r.records[0].record_key() == "man|worked_as|orig#5");

  CHECK_THROWS_AS(run_generation(one, {}, gen), ConfigError);
  CHECK_THROWS_AS(run_generation(one, {1, 1}, gen), ConfigError);
  GenerationOptions bad;
  bad.top_k = 0;
  CHECK_THROWS_AS(run_generation(one, {1}, gen, bad), ConfigError);
  GenerationOptions cold;
  cold.temperature = 0.0;
  CHECK_THROWS_AS(run_generation(one, {1}, gen, cold), ConfigError);

  FlakyGenerator flaky;
  const auto retried = run_generation(one, {0, 1, 2}, flaky);
  CHECK(retried.records.size() == 3);
  CHECK(retried.generator_calls == 6);

  DeadGenerator dead;
  const auto skipped = run_generation(one, {0, 1}, dead, GenerationOptions{40, 40, 2, RetryPolicy{2, {}}});
  CHECK(skipped.records.empty());
  REQUIRE(skipped.skips.size() == 2);
  CHECK(skipped.skips[0].stage == Stage::generate);
  CHECK(skipped.skips[0].seed == std::optional<std::uint64_t>(0));
  CHECK(skipped.generator_calls == 4);

  BrokenGenerator broken;
  CHECK_THROWS_AS(run_generation(one, {0}, broken), std::logic_error);
}

TEST_CASE("scoring maps labels and skips empty completions") {
  MarkerScorer scorer;
  std::vector<GenerationRecord> records;
  const PromptKey key{"woman", "worked_as", 2};
  records.push_back({key, 0, "p", "x " + regard_marker(RegardLabel::positive), "mock"});
  records.push_back({key, 1, "p", "x " + regard_marker(RegardLabel::negative), "mock"});
  records.push_back({key, 2, "p", "x " + regard_marker(RegardLabel::neutral), "mock"});
  records.push_back({key, 3, "p", "  \n", "mock"});
  records.push_back({key, 4, "p", "no marker", "mock"});

  const auto s = run_scoring(records, scorer);
  REQUIRE(s.scored.size() == 4);
  CHECK(s.scored[0].score == 1);
  CHECK(s.scored[1].score == -1);
  CHECK(s.scored[2].score == 0);
  CHECK(s.scored[3].unscorable);
  CHECK(s.unscorable == 1);
  REQUIRE(s.skips.size() == 1);
  CHECK(s.skips[0].reason == "empty completion");
  CHECK(s.skips[0].seed == std::optional<std::uint64_t>(3));
}

TEST_CASE("record JSON round-trip") {
  ScoredRecord r;
  r.key = PromptKey{"gay", "was_described_as", 12};
  r.seed = 9;
  r.prompt_text = "the gay person was described as";
  r.generated_text = "a \"quoted\"\nline";
  r.model_id = "mock";
  r.label = RegardLabel::negative;
  r.score = -1;
  const nlohmann::json j = r;
  CHECK(j["prompt_id"] == "gay|was_described_as|s012");
  CHECK(j.get<ScoredRecord>() == r);

  const SkipEntry skip{Stage::paraphrase, "man|worked_as|s001", std::nullopt, "paraphrase refused"};
  CHECK(nlohmann::json(skip).get<SkipEntry>() == skip);

  nlohmann::json wrong = r;
  wrong["score"] = 1;
  CHECK_THROWS_AS(wrong.get<ScoredRecord>(), DataError);
}

TEST_CASE("parallel_for rethrows the first failure") {
  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i == 10) throw DataError("boom");
                               }),
                  DataError);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);
}
