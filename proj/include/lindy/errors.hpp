#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lindy {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed parameters, files, or configuration. The CLI maps
// these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a trustworthy answer. The CLI maps
// these to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NearSingularF : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMoment : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularB : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroBeta : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDenominator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// EM log-likelihood went down by more than the allowed slack. This is a
// bug, not a data problem.
class MonotonicityViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptyTrajectory : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SeriesTooShort : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Duplicated or decreasing block numbers.
class MonotonicityError : public ValidationError {
 public:
  MonotonicityError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lindy
