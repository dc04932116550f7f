#pragma once

#include <stdexcept>
#include <string>

namespace crossview {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// usage=1, validation=2, io=3, numeric=4.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (CSV rows, config lines). Carries the offending line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& msg, int line)
      : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or other numeric breakdowns (zero-vector normalization).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace crossview
