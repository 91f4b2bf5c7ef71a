#pragma once

#include <stdexcept>
#include <string>

namespace embodied {

// Exception hierarchy. The CLI maps each family onto a distinct exit status:
// ConfigError -> 1 (usage), ValidationError/ParseError -> 2 (data), NumericError
// and CapacityError -> 3 (numeric failure).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions or invalid arguments supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (row sums, probability ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A computation did not produce a usable result.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds what the representation supports.
class CapacityError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace embodied
