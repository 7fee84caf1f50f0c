#pragma once

#include <stdexcept>
#include <string>

namespace ellreg {

/// Rejected input: dimension mismatch, rank deficiency, a matrix that is not
/// positive definite, or an out-of-domain scalar argument.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A numerical routine failed to meet its tolerance: adaptive quadrature ran
/// out of panels, a series hit the truncation cap, a quantile search did not
/// converge, or a series term sits on a pole.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A statistic took a value at which the requested estimator is undefined,
/// e.g. the Stein-type estimator when the test statistic is zero.
class degenerate_statistic_error : public std::runtime_error {
 public:
  explicit degenerate_statistic_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The requested combination is outside the supported family: shrinkage with
/// q < 3, sampling from a signed mixing weight, closed forms that exist only
/// for specific error laws.
class unsupported_error : public std::runtime_error {
 public:
  explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ellreg
