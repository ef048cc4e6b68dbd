#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracspread {

// Problems with the content of a data file (values out of range, missing
// columns, unreadable paths).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text in a data file; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Bad run configuration: unknown algorithm name, inconsistent flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds what an exact or exhaustive routine can handle.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracspread
