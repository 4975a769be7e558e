#pragma once

#include <stdexcept>
#include <string>

namespace khess {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Floating point or factorization failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model data that violates a structural requirement (sign, degeneracy).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear or nonlinear solver failure.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature order escalation disagrees beyond tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace khess
