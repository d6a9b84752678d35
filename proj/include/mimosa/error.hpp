#pragma once

#include <stdexcept>
#include <string>

namespace mimosa {

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input record violates a data invariant (bad counts, malformed CSV row).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent file layout, e.g. mismatched category sets.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Invalid run configuration, detected before any computation starts.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The p_s > p_u constraint has (numerically) zero prior mass.
class DegenerateConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation or moment-matching parameters that cannot be honoured.
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objective not finite at the optimizer starting point.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mimosa
