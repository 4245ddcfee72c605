#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace averimatec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. `line()` is 1-based, 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A model, judge, embedding or search backend failed.
class AdapterError : public Error {
 public:
  using Error::Error;
};

/// Collects non-fatal warnings from operations that degrade instead of failing.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const noexcept { return warnings.empty(); }
};

}  // namespace averimatec
