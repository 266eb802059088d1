#pragma once

#include <stdexcept>
#include <string>

namespace omk {

// Invalid user input (bad sizes, out-of-range parameters, schema violations).
// The CLI maps these to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failures: parameters outside the regime where a formula holds,
// band touchings, integrator guards. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Requested frequency or momentum outside an edge branch.
class OutOfBand : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepSizeError : public NumericalError {
 public:
  StepSizeError(const std::string& what, double suggested_dt)
      : NumericalError(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace omk
