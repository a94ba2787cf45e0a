#pragma once

#include <stdexcept>
#include <string>

namespace stableprod {

/// A computation that ran but could not produce a trustworthy number:
/// quadrature that missed its tolerance, a fit over a zero count, a rejection
/// sampler that exhausted its attempt budget.
class numerical_failure : public std::runtime_error {
 public:
  explicit numerical_failure(const std::string& what, double achieved_error = 0.0)
      : std::runtime_error(what), achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

}  // namespace stableprod
