#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace msprr {

// Raised when inputs violate a documented invariant. Carries one message per
// violated field so callers can report all of them at once.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Raised when a factorization or filter cannot proceed even after the
// jitter policy has been applied.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace msprr
