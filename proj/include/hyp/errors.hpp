#pragma once

#include <stdexcept>
#include <string>

namespace hyp {

/// Caller violated a shape, range or configuration contract.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced or received a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted midpoint whose denominator is too close to zero to be evaluated.
class DegenerateMidpoint : public NumericalError {
 public:
  explicit DegenerateMidpoint(double denominator)
      : NumericalError("degenerate midpoint denominator: " + std::to_string(denominator)),
        denominator_(denominator) {}

  double denominator() const noexcept { return denominator_; }

 private:
  double denominator_;
};

/// Malformed input file; the message names the file and line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hyp
