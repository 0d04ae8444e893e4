#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hcl {

// Malformed or inconsistent input data (corpus files, wheel configs, labels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A corpus record that cannot be parsed; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A configuration value outside its documented range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hcl
