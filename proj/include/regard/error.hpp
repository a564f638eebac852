#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regard {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid inputs or settings (empty group list, bad profile, k out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed data file or record line.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bracketed parse failed; offset is the character position of the fault.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A remote port call failed in a way worth retrying.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace regard
