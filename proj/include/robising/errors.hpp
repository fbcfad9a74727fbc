#pragma once

#include <stdexcept>
#include <string>

namespace robising {

/// Invalid argument or parameter combination.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain (e.g. a spin that is not +-1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem size exceeds an enumeration cap or memory budget.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Iterative procedure failed to converge.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The external-field learner refused to run because its feasibility
/// inequality does not hold. Carries both sides of the inequality.
class ConstraintRefusal : public ParameterError {
 public:
  ConstraintRefusal(const std::string& what, double lhs, double rhs)
      : ParameterError(what), lhs_(lhs), rhs_(rhs) {}
  double lhs() const noexcept { return lhs_; }
  double rhs() const noexcept { return rhs_; }

 private:
  double lhs_;
  double rhs_;
};

/// Receives non-fatal warnings (e.g. sampling outside Dobrushin's regime).
/// Defaults to writing to stderr; pass nullptr to silence.
using WarningSink = void (*)(const std::string&);
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace robising
