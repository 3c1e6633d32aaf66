#pragma once

#include <stdexcept>
#include <string>

namespace bvi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Cholesky hit a non-positive pivot.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Natural parameters outside the interior of the family's domain.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

/// Mean parameters outside the interior of the conjugate domain (covariance
/// block of the moments not positive definite).
class DualDomainViolation : public Error {
 public:
  using Error::Error;
};

/// Quadrature integrand was not finite on the grid.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

/// No closed-form proximal map for this (regularizer, family) pairing.
class UnsupportedRegularizer : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed validation; the message carries the field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bvi
