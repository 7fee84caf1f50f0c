#pragma once

// Central special functions: regularized incomplete beta and gamma, central
// chi-square and F distributions, and the central F quantile. Everything here
// is classical double-precision machinery (Lentz continued fractions and
// power series); the generalized series distributions are built on top of it
// in distributions.hpp.

#include <cmath>
#include <limits>
#include <string>

#include "ellreg/errors.hpp"

namespace ellreg {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz.
inline double beta_cf(double a, double b, double x) {
  constexpr int max_iter = 500;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= eps) return h;
  }
  throw numerical_error("incomplete_beta: continued fraction did not converge");
}

// Regularized lower incomplete gamma by series (x < a + 1).
inline double gamma_p_series(double a, double x) {
  constexpr int max_iter = 1000;
  const double eps = std::numeric_limits<double>::epsilon();
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < max_iter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * eps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numerical_error("gamma_p: series did not converge");
}

// Regularized upper incomplete gamma by continued fraction (x >= a + 1).
inline double gamma_q_cf(double a, double x) {
  constexpr int max_iter = 1000;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = std::numeric_limits<double>::min() / eps;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= max_iter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= eps)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw numerical_error("gamma_q: continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for x in [0, 1], a > 0, b > 0.
inline double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw validation_error("incomplete_beta: parameters must be positive, got a=" +
                           std::to_string(a) + " b=" + std::to_string(b));
  if (!(x >= 0.0 && x <= 1.0))
    throw validation_error("incomplete_beta: x must lie in [0,1], got x=" + std::to_string(x));
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(-log_beta(a, b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw validation_error("gamma_p: a must be positive");
  if (!(x >= 0.0)) throw validation_error("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

/// Central chi-square cdf with dof degrees of freedom.
inline double chi_squared_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

/// Central F(d1, d2) cdf.
inline double central_f_cdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double z = d1 * x / (d2 + d1 * x);
  return incomplete_beta(z, 0.5 * d1, 0.5 * d2);
}

/// Central F(d1, d2) pdf.
inline double central_f_pdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  const double lr = 0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(x) -
                    log_beta(0.5 * d1, 0.5 * d2) -
                    0.5 * (d1 + d2) * std::log1p(d1 * x / d2);
  return std::exp(lr);
}

/// Upper alpha point of the central F(q, m) distribution: the value F_alpha
/// with cdf(F_alpha) = 1 - alpha, located by bracketing bisection with a
/// Newton polish. Converges to |cdf - (1-alpha)| < 1e-12.
inline double central_f_quantile(int q_dof, int m_dof, double alpha) {
  if (q_dof < 1 || m_dof < 1)
    throw validation_error("central_f_quantile: degrees of freedom must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw validation_error("central_f_quantile: alpha must lie in (0,1)");
  const double d1 = q_dof, d2 = m_dof;
  const double target = 1.0 - alpha;
  double lo = 0.0, hi = 1.0;
  int expand = 0;
  while (central_f_cdf(hi, d1, d2) < target) {
    lo = hi;
    hi *= 2.0;
    if (++expand > 2000)
      throw numerical_error("central_f_quantile: failed to bracket quantile (pathological dof)");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = central_f_cdf(mid, d1, d2) - target;
    if (std::fabs(f) < 1e-13) break;
    (f < 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-15 * std::max(1.0, lo)) break;
  }
  // Newton polish; keep the bisection answer if the step misbehaves.
  double x = mid;
  for (int it = 0; it < 4; ++it) {
    const double pdf = central_f_pdf(x, d1, d2);
    if (!(pdf > 0.0)) break;
    const double step = (central_f_cdf(x, d1, d2) - target) / pdf;
    const double next = x - step;
    if (!(next > lo && next < hi)) break;
    x = next;
  }
  if (std::fabs(central_f_cdf(x, d1, d2) - target) > 1e-10)
    throw numerical_error("central_f_quantile: did not reach tolerance 1e-10");
  return x;
}

}  // namespace ellreg
