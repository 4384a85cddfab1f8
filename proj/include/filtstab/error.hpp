#pragma once

#include <stdexcept>
#include <string>

namespace filtstab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad dimensions, negative entries,
/// kernels that are not stochastic, unknown keys, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A computation that cannot proceed: zero normalizers, non-convergent
/// iterations, instances too large for enumeration.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace filtstab
