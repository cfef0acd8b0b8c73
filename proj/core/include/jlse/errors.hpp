#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jlse {

/// Rejected input: bad shapes, out-of-range counts, malformed configuration.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A solver produced a non-finite objective.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based; 0 means "whole file".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& detail, std::size_t line, const std::string& context = {})
      : std::runtime_error(compose(detail, line, context)), detail_(detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string compose(const std::string& detail, std::size_t line,
                             const std::string& context) {
    std::string out = context.empty() ? std::string() : context + ": ";
    if (line != 0) out += "line " + std::to_string(line) + ": ";
    return out + detail;
  }

  std::string detail_;
  std::size_t line_;
};

}  // namespace jlse
