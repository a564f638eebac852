#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regard/prompt.hpp"
#include "regard/syntax.hpp"

namespace regard {

enum class RegardLabel { positive, negative, neutral };

inline constexpr RegardLabel kAllLabels[] = {RegardLabel::positive, RegardLabel::negative,
                                             RegardLabel::neutral};

std::string_view to_string(RegardLabel label);
// Accepts exactly "positive", "negative" or "neutral".
RegardLabel parse_regard_label(std::string_view text);

// +1 / -1 / 0.
constexpr int regard_score(RegardLabel label) {
  switch (label) {
    case RegardLabel::positive: return 1;
    case RegardLabel::negative: return -1;
    case RegardLabel::neutral: return 0;
  }
  return 0;
}

// Categorical regard distribution in (positive, negative, neutral) order.
struct Categorical {
  double positive = 0.0;
  double negative = 0.0;
  double neutral = 0.0;

  std::array<double, 3> as_array() const { return {positive, negative, neutral}; }
  static Categorical from_array(const std::array<double, 3>& p) { return {p[0], p[1], p[2]}; }
  // Throws ConfigError unless every component is >= 0 and the sum is 1 within tol.
  void validate(double tol = 1e-9) const;

  bool operator==(const Categorical&) const = default;
};

inline constexpr int kOriginalStructure = -1;

// Identity of one prompt instance: (group, verb phrase, structure or original).
struct PromptKey {
  std::string group_id;
  std::string vp_id;
  int structure_id = kOriginalStructure;

  bool is_original() const { return structure_id == kOriginalStructure; }
  // "group|vp|orig" or "group|vp|s007"; sorts originals first.
  std::string str() const;
  static PromptKey parse(std::string_view key);

  auto operator<=>(const PromptKey&) const = default;
};

// ---------------------------------------------------------------------------
// Ports
// ---------------------------------------------------------------------------

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  // nullopt means the paraphraser declined; TransportError means retry.
  virtual std::optional<std::string> paraphrase(const PromptTemplate& prompt,
                                                const SyntacticStructure& structure) = 0;
  virtual std::string id() const = 0;
};

struct GenerationRequest {
  std::string prompt_text;
  std::uint64_t seed = 0;
  int top_k = 40;
  int max_new_tokens = 40;
  // Not sent over the wire; lets in-process generators key on prompt identity.
  PromptKey key;
  std::optional<double> temperature;  // sent only when set
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

struct ScoreResult {
  RegardLabel label = RegardLabel::neutral;
  std::optional<std::array<double, 3>> probs;
  bool unscorable = false;  // label defaulted to neutral
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreResult score(std::string_view text) = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Built-in implementations
// ---------------------------------------------------------------------------

// Returns the template text unchanged.
class IdentityParaphraser final : public Paraphraser {
 public:
  std::optional<std::string> paraphrase(const PromptTemplate& prompt,
                                        const SyntacticStructure& structure) override;
  std::string id() const override { return "identity"; }
};

// Regard distributions keyed by (group, structure). A group or structure of
// "*" is a wildcard; structure "original" addresses the unparaphrased prompt.
// Lookup order: exact, (group, *), (*, structure), (*, *).
class MockProfile {
 public:
  static constexpr std::string_view kWildcard = "*";

  MockProfile() = default;
  explicit MockProfile(std::uint64_t master_seed) : master_seed_(master_seed) {}

  void set(std::string group, std::string structure, Categorical dist);
  void set(std::string group, int structure_id, Categorical dist);
  // Throws ConfigError when no entry applies.
  const Categorical& lookup(std::string_view group_id, int structure_id) const;

  std::uint64_t master_seed() const { return master_seed_; }
  const std::map<std::pair<std::string, std::string>, Categorical>& entries() const {
    return entries_;
  }

  // {"master_seed": int, "distributions": [{"group", "structure", "p": [pos, neg, neu]}]}
  // "structure" may be an integer id, "original", or "*".
  static MockProfile from_json_text(std::string_view text);
  static MockProfile load(const std::filesystem::path& path);
  std::string to_json_text() const;

  // Default per-group distributions, in percent:
  // man 31/21/48, woman 23/23/54, white 10/26/64, black 9/26/65,
  // straight 28/18/54, gay 9/51/40. Applied to every structure.
  static MockProfile reference(std::uint64_t master_seed = 0);

 private:
  static std::string structure_key(int structure_id);

  std::uint64_t master_seed_ = 0;
  std::map<std::pair<std::string, std::string>, Categorical> entries_;
};

// Draws a label per request from the profile using a hash of
// (master seed, prompt key, seed); no shared mutable state.
class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(MockProfile profile) : profile_(std::move(profile)) {}

  std::string generate(const GenerationRequest& request) override;
  std::string model_id() const override { return "mock"; }

  RegardLabel draw_label(const GenerationRequest& request) const;
  const MockProfile& profile() const { return profile_; }

 private:
  MockProfile profile_;
};

// Marker embedded by MockGenerator, e.g. "[regard=positive]".
std::string regard_marker(RegardLabel label);

// Recognizes the MockGenerator marker; text without one is unscorable.
class MarkerScorer final : public Scorer {
 public:
  ScoreResult score(std::string_view text) override;
  std::string id() const override { return "marker"; }
};

// Keyword polarity with clause-scoped negation. Positive terms inside the
// scope of a negator ("not", "never", "n't", ...) count as negative. The
// majority polarity wins; ties and no hits are neutral.
class LexiconScorer final : public Scorer {
 public:
  ScoreResult score(std::string_view text) override;
  std::string id() const override { return "lexicon"; }
};

}  // namespace regard
