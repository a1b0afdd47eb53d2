#pragma once

#include <stdexcept>
#include <string>

namespace plcert {

// Raised when an input violates a documented precondition or a type invariant.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a risk value lies outside the region where a randomized subset
// satisfying the mixture constraint exists. Carries the threshold that was hit.
class InfeasibleError : public std::domain_error {
 public:
  InfeasibleError(const std::string& what, double threshold)
      : std::domain_error(what), threshold_(threshold) {}

  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

// Training failed (empty data, divergence, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace plcert
