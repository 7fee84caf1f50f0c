#pragma once

// Error-law specification for the regression model. An elliptically contoured
// law is represented through its normal-mixture form: the error vector is
// N(0, t^-1 sigma^2 V) conditional on t, where t follows the mixing weight
// W(t) on (0, inf). W may be a signed measure; the covariance factor
// -2 psi'(0) = integral of t^-1 W(t) dt scales Cov(eps) = -2psi'(0) sigma^2 V.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "ellreg/errors.hpp"
#include "ellreg/quadrature.hpp"
#include "ellreg/rng.hpp"

namespace ellreg {

enum class ErrorFamily { normal, student_t, custom_mixing };

inline const char* family_name(ErrorFamily f) {
  switch (f) {
    case ErrorFamily::normal: return "normal";
    case ErrorFamily::student_t: return "student_t";
    default: return "custom_mixing";
  }
}

class EllipticalSpec {
 public:
  /// Normal errors: the mixing weight is a point mass at t = 1.
  static EllipticalSpec make_normal(double sigma2) {
    EllipticalSpec s;
    s.family_ = ErrorFamily::normal;
    s.set_sigma2(sigma2);
    s.psi_factor_ = 1.0;
    return s;
  }

  /// Multivariate Student-t errors with gamma > 2 degrees of freedom:
  /// t = u / gamma with u ~ chi^2_gamma, giving Cov = gamma/(gamma-2) sigma^2 V.
  static EllipticalSpec make_student_t(double gamma, double sigma2) {
    if (!(gamma > 2.0))
      throw validation_error("EllipticalSpec: Student-t requires gamma > 2, got " +
                             std::to_string(gamma));
    EllipticalSpec s;
    s.family_ = ErrorFamily::student_t;
    s.set_sigma2(sigma2);
    s.gamma_ = gamma;
    s.psi_factor_ = gamma / (gamma - 2.0);
    return s;
  }

  /// User-supplied mixing weight W(t). For a probability mixing
  /// (is_signed = false) W must integrate to 1 within 1e-8. A sampler
  /// (inverse cdf on (0,1)) may be supplied to enable Monte Carlo draws.
  static EllipticalSpec make_custom(std::function<double(double)> weight, bool is_signed,
                                    double sigma2,
                                    std::function<double(double)> inverse_cdf = nullptr) {
    if (!weight) throw validation_error("EllipticalSpec: custom mixing weight is empty");
    EllipticalSpec s;
    s.family_ = ErrorFamily::custom_mixing;
    s.set_sigma2(sigma2);
    s.weight_ = std::move(weight);
    s.is_signed_ = is_signed;
    s.inverse_cdf_ = std::move(inverse_cdf);

    const auto& w = s.weight_;
    // Jordan parts of t^-1 W(t) must both be integrable for the covariance
    // factor to exist; a diverging integral shows up as quadrature exhaustion.
    double pos = 0.0, neg = 0.0;
    try {
      pos = integrate_zero_to_inf([&w](double t) { return std::max(w(t), 0.0) / t; }, 1e-10);
      neg = integrate_zero_to_inf([&w](double t) { return std::max(-w(t), 0.0) / t; }, 1e-10);
    } catch (const numerical_error&) {
      throw validation_error(
          "EllipticalSpec: integral of t^-1 W(t) does not exist (quadrature diverged)");
    }
    if (!std::isfinite(pos) || !std::isfinite(neg))
      throw validation_error("EllipticalSpec: integral of t^-1 W(t) does not exist");
    s.psi_factor_ = pos - neg;
    if (!(s.psi_factor_ > 0.0) || !std::isfinite(s.psi_factor_))
      throw validation_error("EllipticalSpec: covariance factor -2psi'(0) must be finite and positive");
    s.abs_psi_factor_ = pos + neg;

    const double mass = integrate_zero_to_inf(w, 1e-10);
    s.total_mass_ = mass;
    if (!is_signed && std::fabs(mass - 1.0) > 1e-8)
      throw validation_error("EllipticalSpec: probability mixing must integrate to 1, got " +
                             std::to_string(mass));
    return s;
  }

  ErrorFamily family() const { return family_; }
  double sigma2() const { return sigma2_; }
  double gamma() const { return gamma_; }
  bool is_signed() const { return is_signed_; }
  bool has_sampler() const {
    return family_ != ErrorFamily::custom_mixing || static_cast<bool>(inverse_cdf_);
  }
  const std::function<double(double)>& mixing_weight() const { return weight_; }

  /// -2 psi'(0) = integral of t^-1 W(t) dt: 1 for normal, gamma/(gamma-2) for
  /// Student-t, evaluated by quadrature for a custom weight.
  double psi_factor() const { return psi_factor_; }

  /// integral of t^-1 |W|(t) dt (total variation version; equals psi_factor
  /// for probability mixings).
  double abs_psi_factor() const { return abs_psi_factor_ > 0.0 ? abs_psi_factor_ : psi_factor_; }

  /// sigma^2_eps = -2 psi'(0) sigma^2, the scalar in Cov(eps) = sigma^2_eps V.
  double sigma2_eps() const { return psi_factor_ * sigma2_; }

  /// Draw the mixing variable t. Normal is the point mass t = 1; Student-t
  /// draws chi^2_gamma / gamma; a custom probability mixing requires the
  /// user-supplied inverse cdf.
  double sample_t(Rng& rng) const {
    switch (family_) {
      case ErrorFamily::normal:
        return 1.0;
      case ErrorFamily::student_t: {
        std::gamma_distribution<double> g(0.5 * gamma_, 2.0 / gamma_);
        return g(rng);
      }
      case ErrorFamily::custom_mixing:
      default: {
        if (is_signed_)
          throw unsupported_error("sample_t: cannot sample from a signed mixing weight");
        if (!inverse_cdf_)
          throw unsupported_error("sample_t: custom mixing has no sampler; supply an inverse cdf");
        std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
        const double t = inverse_cdf_(u(rng));
        if (!(t > 0.0) || !std::isfinite(t))
          throw numerical_error("sample_t: custom sampler returned a non-positive value");
        return t;
      }
    }
  }

 private:
  void set_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw validation_error("EllipticalSpec: sigma2 must be positive, got " +
                             std::to_string(sigma2));
    sigma2_ = sigma2;
  }

  ErrorFamily family_ = ErrorFamily::normal;
  double sigma2_ = 1.0;
  double gamma_ = 0.0;
  bool is_signed_ = false;
  double psi_factor_ = 1.0;
  double abs_psi_factor_ = 0.0;
  double total_mass_ = 1.0;
  std::function<double(double)> weight_;
  std::function<double(double)> inverse_cdf_;
};

}  // namespace ellreg
