#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairsl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rule-file or data-file syntax/validation error with a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The constraint system admits no point of the unit box.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A fairness metric whose denominator or stratum is empty.
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace fairsl
