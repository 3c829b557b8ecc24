#pragma once

#include <stdexcept>
#include <string>

namespace driftcrb {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested bound diverges: a unit-root drift that was never calibrated
/// carries unbounded variance, so no finite estimator variance exists.
class InfiniteCrbError : public Error {
 public:
  using Error::Error;
};

/// A covariance factorization failed (matrix not positive definite).
class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

/// The information matrix is numerically singular after equilibration.
class SingularFimError : public Error {
 public:
  using Error::Error;
};

/// Sensors straddle the stationary (rho < 1) and unit-root (rho = 1)
/// regimes; closed-form constants cannot be pooled across that boundary.
class MixedRegimeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace driftcrb
