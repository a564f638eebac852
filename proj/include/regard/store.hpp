#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "regard/error.hpp"

namespace regard {

// Reads one JSON value per line. A final line without a trailing newline is
// treated as an interrupted append and ignored; any other undecodable line
// raises DataError naming the line.
template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path);

// Writes one compact JSON value per line, in the given order.
template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items);

// Thread-safe line appender with a flush per record.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);
  void append(const nlohmann::json& value);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty, key-sorted, newline-terminated.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// File names inside a run directory.
namespace store_files {
inline constexpr const char* kPrompts = "prompts.jsonl";
inline constexpr const char* kRecords = "records.jsonl";
inline constexpr const char* kScored = "scored.jsonl";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kAnalysis = "analysis.json";
inline constexpr const char* kRobustness = "robustness.json";
}  // namespace store_files

// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const bool complete = !in.eof();
    try {
      out.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const std::exception& e) {
      if (!complete) break;
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    for (const auto& item : items) out << nlohmann::json(item).dump() << '\n';
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace regard
