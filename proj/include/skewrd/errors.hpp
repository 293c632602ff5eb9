#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skewrd {

// Invalid arguments are reported with std::invalid_argument; everything below
// signals a failure of the numerics rather than of the caller.

/// Non-finite values or a failed iteration inside a numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite reaction value at a quadrature point of a given element.
class ElementEvaluationError : public NumericalError {
 public:
  ElementEvaluationError(std::size_t element, const std::string& what)
      : NumericalError(what + " (element " + std::to_string(element) + ")"),
        element_(element) {}
  std::size_t element() const noexcept { return element_; }

 private:
  std::size_t element_;
};

/// A sparse or dense factorization met a singular matrix.
class LinearSolverError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Newton did not reach its tolerance (or diverged).
class NewtonFailure : public NumericalError {
 public:
  NewtonFailure(const std::string& what, double residual, int iterations)
      : NumericalError(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A time step failed; carries the step index and the last residual.
class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, std::size_t step, double residual)
      : NumericalError(what + " at step " + std::to_string(step)),
        step_(step),
        residual_(residual) {}
  std::size_t step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t step_;
  double residual_;
};

/// Analysis requested outside the regime where it applies.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested more POD modes than the snapshot set supports.
class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, std::size_t achievable)
      : NumericalError(what + " (achievable rank " + std::to_string(achievable) + ")"),
        achievable_(achievable) {}
  std::size_t achievable_rank() const noexcept { return achievable_; }

 private:
  std::size_t achievable_;
};

/// DEIM greedy selection met a residual that vanished identically.
class SelectionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace skewrd
