#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace euler_rates {

/// Argument outside the mathematical domain of an operation (e.g. a point on
/// the branch cut, an order outside (0, 2]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation hit a pole of a rational symbol.
class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A representation or an integral that should be finite is not.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature ran out of panels before meeting its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied decay hint is contradicted by sampled integrand values.
class InvalidHintError : public QuadratureError {
 public:
  using QuadratureError::QuadratureError;
};

/// An inner integral of a nested computation failed to converge.
class NestedQuadratureError : public QuadratureError {
 public:
  using QuadratureError::QuadratureError;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// f(A) requested with a τ = 0 singularity while A has a zero eigenvalue.
class NonInjectiveError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SingularSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The probe eigenvalue ±i sqrt(n)/t is not on the spectrum list.
class MissingProbeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Configuration or payload failed validation. `field()` names the offending key.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace euler_rates
