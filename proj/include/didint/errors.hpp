#pragma once

#include <stdexcept>

namespace didint {

// Malformed or inconsistent input (bad CSV, bad config, broken schedule).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is well formed but the requested estimate cannot be computed
// (no valid control, aliased treatment dummy, logit separation, ...).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace didint
