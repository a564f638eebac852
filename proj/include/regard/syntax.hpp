#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace regard {

// Node of a linearized constituency skeleton such as "(ROOT (S (NP ) (VP )))".
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;

  bool operator==(const ParseTree&) const = default;

  std::size_t node_count() const;
  std::size_t depth() const;
};

// Whitespace-insensitive. Throws ParseError carrying the offending offset.
ParseTree parse_structure(std::string_view text);

// Canonical form: "(LABEL (CHILD ) ...)", one space between siblings and a
// single space before the ")" of a leaf.
std::string serialize(const ParseTree& tree);

enum class StructureSource { ParaNMT, QQPPos };

std::string_view to_string(StructureSource source);
StructureSource parse_structure_source(std::string_view text);

struct SyntacticStructure {
  int id;  // position in the structure set, assigned in file order
  StructureSource source;
  std::string linearized;  // canonical serialization of tree
  ParseTree tree;
};

// One record per line: "<source>\t<linearized parse>". Blank lines and lines
// starting with '#' are ignored. Throws DataError naming the line on a
// malformed record or a duplicate structure.
std::vector<SyntacticStructure> load_structure_set(const std::filesystem::path& path);

std::vector<SyntacticStructure> parse_structure_set(std::string_view contents,
                                                    std::string_view origin = "<memory>");

// Path of the 100-structure file shipped with the tool.
std::filesystem::path default_structure_path();

// FNV-1a over the canonical strings; stable across runs and platforms.
std::string structure_set_digest(const std::vector<SyntacticStructure>& set);

}  // namespace regard
