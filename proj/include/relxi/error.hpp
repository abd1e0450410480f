#pragma once

#include <stdexcept>
#include <string>

namespace relxi {

// Error taxonomy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Result not representable in double precision.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Bad user configuration (grid sizes, tolerances, malformed options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unsupported obstacle scene.
class SceneError : public Error {
 public:
  using Error::Error;
};

/// Bad input data handed to an analysis routine.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, singular factorization...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The minimizing chord is not isolated; the strict convexity hypothesis fails.
class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace relxi
