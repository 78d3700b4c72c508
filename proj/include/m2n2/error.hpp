#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace m2n2 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input bytes do not follow the expected file layout (bad magic, version).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input is truncated or has trailing garbage.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Iterative procedure hit its round cap before reaching tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Caller passed an object in the wrong state (e.g. a row-stochastic matrix
/// where a doubly stochastic one is required).
class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Operation is not allowed in the current session state (undo on empty).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace m2n2
