#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stiefelcd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, inconsistent sizes, invalid configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Operand shapes do not agree.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure inside the optimizer.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A point pair lies outside the domain where the inverse retraction exists,
/// or a retraction input is rank deficient.
class RetractionDomainError : public SolverError {
 public:
  using SolverError::SolverError;
};

class ProxError : public SolverError {
 public:
  ProxError(const std::string& what, double best_residual)
      : SolverError(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace stiefelcd
