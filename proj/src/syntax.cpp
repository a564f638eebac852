#include "regard/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "regard/error.hpp"
#include "regard/hash.hpp"

namespace regard {

std::size_t ParseTree::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

std::size_t ParseTree::depth() const {
  std::size_t d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ParseTree parse_root() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty structure", pos_);
    ParseTree root = parse_node();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("trailing tokens after root", pos_);
    return root;
  }

 private:
  // Iterative descent keeps pathological nesting off the call stack.
  ParseTree parse_node() {
    std::vector<ParseTree> stack;
    expect_open();
    stack.push_back(ParseTree{read_label(), {}});
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", pos_);
      const char c = text_[pos_];
      if (c == '(') {
        ++pos_;
        stack.push_back(ParseTree{read_label(), {}});
      } else if (c == ')') {
        ++pos_;
        ParseTree done = std::move(stack.back());
        stack.pop_back();
        if (stack.empty()) return done;
        stack.back().children.push_back(std::move(done));
      } else {
        throw ParseError("unexpected token '" + std::string(1, c) + "'", pos_);
      }
    }
  }

  void expect_open() {
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    ++pos_;
  }

  std::string read_label() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      ++pos_;
    if (pos_ == start) {
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses", pos_);
      throw ParseError("empty label", pos_);
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void serialize_into(const ParseTree& tree, std::string& out) {
  out += '(';
  out += tree.label;
  out += ' ';
  for (std::size_t i = 0; i < tree.children.size(); ++i) {
    if (i > 0) out += ' ';
    serialize_into(tree.children[i], out);
  }
  out += ')';
}

}  // namespace

ParseTree parse_structure(std::string_view text) { return Parser(text).parse_root(); }

std::string serialize(const ParseTree& tree) {
  std::string out;
  serialize_into(tree, out);
  return out;
}

std::string_view to_string(StructureSource source) {
  return source == StructureSource::ParaNMT ? "ParaNMT" : "QQP-Pos";
}

StructureSource parse_structure_source(std::string_view text) {
  if (text == "ParaNMT") return StructureSource::ParaNMT;
  if (text == "QQP-Pos") return StructureSource::QQPPos;
  throw DataError("unknown structure source '" + std::string(text) + "'");
}

std::vector<SyntacticStructure> parse_structure_set(std::string_view contents,
                                                    std::string_view origin) {
  std::vector<SyntacticStructure> out;
  std::unordered_map<std::string, std::size_t> seen;  // canonical -> line
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  const auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(where() + "expected '<source>\\t<parse>'");
    SyntacticStructure s;
    s.id = static_cast<int>(out.size());
    try {
      s.source = parse_structure_source(line.substr(0, tab));
      s.tree = parse_structure(std::string_view(line).substr(tab + 1));
    } catch (const Error& e) {
      throw DataError(where() + e.what());
    }
    s.linearized = serialize(s.tree);
    if (auto [it, fresh] = seen.emplace(s.linearized, lineno); !fresh) {
      throw DataError(where() + "duplicate structure " + s.linearized + " (first seen on line " +
                      std::to_string(it->second) + ")");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SyntacticStructure> load_structure_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read structure file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_structure_set(buf.str(), path.string());
}

std::filesystem::path default_structure_path() {
  return std::filesystem::path(REGARD_DATA_DIR) / "structures.tsv";
}

std::string structure_set_digest(const std::vector<SyntacticStructure>& set) {
  Fnv1a h;
  for (const auto& s : set) {
    h.update(to_string(s.source));
    h.update("\t");
    h.update(s.linearized);
    h.update("\n");
  }
  return to_hex(h.value());
}

}  // namespace regard
