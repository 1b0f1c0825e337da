#pragma once

#include <stdexcept>
#include <string>

namespace admmcert {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on numeric input was violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dimensions of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The dense eigensolver only handles small matrices.
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

/// An operation is not available for the given problem kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of budget. Carries its best estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_low, double best_high)
      : Error(what), best_low_(best_low), best_high_(best_high) {}

  double best_low() const noexcept { return best_low_; }
  double best_high() const noexcept { return best_high_; }

 private:
  double best_low_;
  double best_high_;
};

/// ADMM iterates blew up.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// A subproblem solver failed at a given iteration.
class SubproblemError : public Error {
 public:
  SubproblemError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Not enough decay in a trace to estimate a linear rate.
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace admmcert
