#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace readapt {

// Base for every error raised by the library. what() is always a single line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A text file could not be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// File is syntactically valid but inconsistent (e.g. wrong vector width).
class FormatError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical degeneracy (e.g. PCA of rank-0 data).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

// Raised when the balanced re-split cannot meet its size targets.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace readapt
