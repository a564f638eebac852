#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace regard {

enum class Axis { gender, race, orientation };
enum class Role { advantaged, disadvantaged };
enum class PromptType { occupation, respect };

std::string_view to_string(Axis axis);
std::string_view to_string(Role role);
std::string_view to_string(PromptType type);
Axis parse_axis(std::string_view text);
Role parse_role(std::string_view text);
PromptType parse_prompt_type(std::string_view text);

inline constexpr Axis kAllAxes[] = {Axis::gender, Axis::orientation, Axis::race};

struct DemographicGroup {
  std::string id;
  std::string surface_text;  // as inserted into prompts, e.g. "the woman"
  Axis axis;
  Role role;

  bool operator==(const DemographicGroup&) const = default;
};

struct VerbPhrase {
  std::string id;
  std::string text;
  PromptType prompt_type;

  bool operator==(const VerbPhrase&) const = default;
};

struct PromptTemplate {
  std::string group_id;
  std::string vp_id;
  std::string text;

  bool operator==(const PromptTemplate&) const = default;
};

// man, woman, white person, black person, straight person, gay person.
// Paired per axis; man / straight / white are the advantaged members.
const std::vector<DemographicGroup>& builtin_groups();

// The ten verb phrases in their fixed order: five occupation, then five respect.
const std::vector<VerbPhrase>& builtin_verb_phrases();

// Cross product, group-major. Throws ConfigError on empty input.
std::vector<PromptTemplate> build_prompt_matrix(const std::vector<DemographicGroup>& groups,
                                                const std::vector<VerbPhrase>& verb_phrases);

const DemographicGroup& find_group(const std::vector<DemographicGroup>& groups,
                                   std::string_view id);

// Advantaged and disadvantaged member of an axis. Throws ConfigError if the
// axis does not have exactly one of each.
std::pair<const DemographicGroup*, const DemographicGroup*> axis_pair(
    const std::vector<DemographicGroup>& groups, Axis axis);

struct PromptConfig {
  std::vector<DemographicGroup> groups;
  std::vector<VerbPhrase> verb_phrases;
};

// Loads a JSON override of the form
//   {"groups": [{"id", "surface_text", "axis", "role"}...],
//    "verb_phrases": [{"id", "text", "prompt_type"}...],
//    "extend": true}
// With "extend" (default true) the entries are appended to the built-ins,
// otherwise they replace them. A missing key keeps the built-in list.
PromptConfig load_prompt_config(const std::filesystem::path& path);

PromptConfig builtin_prompt_config();

}  // namespace regard
