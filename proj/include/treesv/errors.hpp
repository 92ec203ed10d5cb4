#pragma once

#include <stdexcept>
#include <string>

namespace treesv {

// Error categories map onto CLI exit codes: usage -> 2, validation -> 3,
// property verification -> 4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an exact enumeration would exceed the configured player guard.
struct GuardExceededError : ValidationError {
  using ValidationError::ValidationError;
};

struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace treesv
