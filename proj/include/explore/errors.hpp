#pragma once

#include <stdexcept>
#include <string>

namespace explore {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs with incompatible dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A vector or matrix that should hold probabilities does not.
class InvalidDistributionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range parameters (e.g. an action floor above 1/|A|).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Power iteration did not settle on a fixed point.
class NonErgodicError : public Error {
 public:
  enum class Reason { Periodic, NotConverged };

  NonErgodicError(Reason reason, double residual, const std::string& what)
      : Error(what), reason_(reason), residual_(residual) {}

  Reason reason() const { return reason_; }
  double residual() const { return residual_; }

 private:
  Reason reason_;
  double residual_;
};

/// The chain did not reach the mixing threshold within the step cap.
class NonMixingError : public Error {
 public:
  using Error::Error;
};

/// Eigen-decomposition or factorization failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An optimizer finished without an optimal status.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace explore
