#pragma once

#include <stdexcept>
#include <string>

namespace rdgcc {

/// Malformed input or a violated standing assumption.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A standing assumption (A1-A3) needed by the requested synthesis does not hold.
class AssumptionViolation : public InputError {
 public:
  using InputError::InputError;
};

/// Solver breakdown or another failure that is not the caller's fault.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdgcc
