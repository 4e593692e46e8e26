#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erlab {

// Configuration and input-contract violations. The CLI maps these to exit 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateBatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failures. The CLI maps these to exit 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, std::ptrdiff_t index, double pivot)
      : NumericalError(what), index_(index), pivot_(pivot) {}

  std::ptrdiff_t index() const { return index_; }
  double pivot() const { return pivot_; }

 private:
  std::ptrdiff_t index_;
  double pivot_;
};

class StabilityError : public NumericalError {
 public:
  StabilityError(const std::string& what, double limit) : NumericalError(what), limit_(limit) {}
  double limit() const { return limit_; }

 private:
  double limit_;
};

}  // namespace erlab
