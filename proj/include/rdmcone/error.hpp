#pragma once

#include <stdexcept>
#include <string>

namespace rdmcone {

/// Raised for invalid arguments, malformed input and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input-file error carrying the offending line (1-based, 0 when unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rdmcone
