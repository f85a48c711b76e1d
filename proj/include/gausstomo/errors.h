#pragma once

#include <stdexcept>
#include <string>

namespace gausstomo {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched matrix/vector sizes or an unsupported mode count.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inputs outside the domain of an operation (non-positive variance, eta out of
// range, unphysical covariance where a physical one is required, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The measurement settings do not determine the estimated quantity.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace gausstomo
