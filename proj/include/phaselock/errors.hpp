#pragma once

#include <stdexcept>
#include <string>

namespace phaselock {

// Runtime failures raised by the estimation routines. Precondition
// violations on arguments are reported with std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration produced a covariance outside the PSD cone.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Steady-state search exhausted its step budget.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Closed-form evaluation hit a singular parameter combination.
class SingularInputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is numerically singular.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// Spectrum shape outside the supported one-pole family.
class UnsupportedSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or loop configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace phaselock
