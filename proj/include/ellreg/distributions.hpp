#pragma once

// Series-form generalized non-central F and chi-square distributions under
// normal mixtures, together with the mixing-weight sequences K_r^(h) and the
// inverse / truncated moment series they feed.
//
// Conventions used throughout (and validated by the test suite):
//  * A weight sequence is stored already divided by r!:
//      terms[r] = K_r^(h)(delta*^2) / r!
//    so every consuming series is sum_r terms[r] * coef_r, and for a
//    probability mixing sum_r terms[r] = 1 exactly. In the normal case the
//    terms are the Poisson(delta*^2 / 2) probabilities; for Student-t they
//    form a negative-binomial sequence.
//  * h = 0 weights mix plain conditional expectations; h = 1 weights carry
//    the extra t^-1 factor that appears when a conditional variance rides
//    along. The h = 1 sequence is normalized by -2psi'(0) so that K_0 = 1 at
//    delta*^2 = 0 for every mixing; this is the scale that makes the moment
//    identity E1[chi_{q+2}^-2] - (q-2) E1[chi_{q+2}^-4] = d*2 E2[chi_{q+4}^-4]
//    hold term by term.
//  * Series written G^(2-h)_{q+2i,m}(c; d*2) evaluate the incomplete beta at
//    x' = q c / (m + q c) built from the *original* q, with first parameter
//    (q + 2i)/2 + r; the cut c lives on the scale of the test statistic.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ellreg/accumulate.hpp"
#include "ellreg/elliptical.hpp"
#include "ellreg/errors.hpp"
#include "ellreg/quadrature.hpp"
#include "ellreg/special.hpp"

namespace ellreg {

inline constexpr int kSeriesCap = 500;       // hard cap on the truncation index
inline constexpr double kSeriesTol = 1e-12;  // default remaining-mass tolerance

struct SeriesWeights {
  int h = 0;
  double delta_star2 = 0.0;
  std::vector<double> terms;  // terms[r] = K_r^(h) / r!
  double tail_bound = 0.0;    // bound on the summed mass beyond the truncation
  int truncation_index() const { return static_cast<int>(terms.size()) - 1; }
};

namespace detail {

inline double poisson_pmf(int r, double mu) {
  if (mu <= 0.0) return r == 0 ? 1.0 : 0.0;
  return std::exp(r * std::log(mu) - mu - std::lgamma(r + 1.0));
}

inline SeriesWeights k_weights_custom(const EllipticalSpec& spec, int h, double delta_star2,
                                      double tol) {
  SeriesWeights w;
  w.h = h;
  w.delta_star2 = delta_star2;
  const double a = spec.psi_factor();
  const double lam = 0.5 * a * delta_star2;
  const double norm = (h == 0) ? 1.0 : a;
  const double abs_norm = (h == 0) ? 1.0 : spec.abs_psi_factor();
  const auto& wf = spec.mixing_weight();
  // Total-variation mass of t^-h |W|; for a probability mixing this is 1 for
  // h = 0 and -2psi'(0) for h = 1, and the signed terms are bounded by the
  // absolute ones, so (abs_total - accumulated abs mass)/norm bounds the tail.
  const double abs_total =
      spec.is_signed()
          ? integrate_zero_to_inf(
                [&wf, h](double t) { return std::fabs(wf(t)) * (h == 0 ? 1.0 : 1.0 / t); }, 1e-10)
          : abs_norm;
  KahanSum abs_mass;
  for (int r = 0; r <= kSeriesCap; ++r) {
    const double term = integrate_zero_to_inf(
                            [&wf, r, lam, h](double t) {
                              const double p = poisson_pmf(r, lam * t);
                              if (p == 0.0) return 0.0;
                              return p * wf(t) * (h == 0 ? 1.0 : 1.0 / t);
                            },
                            1e-12) /
                        norm;
    w.terms.push_back(term);
    if (spec.is_signed()) {
      abs_mass.add(integrate_zero_to_inf(
                       [&wf, r, lam, h](double t) {
                         const double p = poisson_pmf(r, lam * t);
                         if (p == 0.0) return 0.0;
                         return p * std::fabs(wf(t)) * (h == 0 ? 1.0 : 1.0 / t);
                       },
                       1e-12) /
                   norm);
    } else {
      abs_mass.add(term);
    }
    w.tail_bound = std::max(0.0, abs_total / norm - abs_mass.value());
    if (w.tail_bound < tol) return w;
    if (lam == 0.0) {  // point contribution only at r = 0
      w.tail_bound = 0.0;
      return w;
    }
  }
  throw numerical_error("k_weights: truncation cap R=" + std::to_string(kSeriesCap) +
                        " reached with tail bound " + std::to_string(w.tail_bound));
}

}  // namespace detail

/// Mixing weights K_r^(h)(delta*^2), stored divided by r! (see the header
/// comment for the normalization). Closed forms are used for the normal
/// (Poisson) and Student-t (negative binomial) families; a custom mixing is
/// integrated by adaptive quadrature. Truncation stops once the remaining
/// mass bound drops below tol, with a hard cap of R = 500.
inline SeriesWeights k_weights(const EllipticalSpec& spec, int h, double delta_star2,
                               double tol = kSeriesTol) {
  if (h != 0 && h != 1) throw validation_error("k_weights: h must be 0 or 1");
  if (!(delta_star2 >= 0.0))
    throw validation_error("k_weights: delta_star2 must be nonnegative");
  if (!(tol > 0.0)) throw validation_error("k_weights: tol must be positive");

  SeriesWeights w;
  w.h = h;
  w.delta_star2 = delta_star2;

  switch (spec.family()) {
    case ErrorFamily::normal: {
      const double lam = 0.5 * delta_star2;
      double term = std::exp(-lam);
      KahanSum mass;
      for (int r = 0; r <= kSeriesCap; ++r) {
        w.terms.push_back(term);
        mass.add(term);
        w.tail_bound = std::max(0.0, 1.0 - mass.value());
        if (w.tail_bound < tol) return w;
        term *= lam / (r + 1);
      }
      break;
    }
    case ErrorFamily::student_t: {
      const double g = spec.gamma();
      const double a = spec.psi_factor();
      const double size = 0.5 * g - h;
      const double rho = a * delta_star2 / (g + a * delta_star2);
      double term = std::pow(1.0 - rho, size);
      KahanSum mass;
      for (int r = 0; r <= kSeriesCap; ++r) {
        w.terms.push_back(term);
        mass.add(term);
        w.tail_bound = std::max(0.0, 1.0 - mass.value());
        if (w.tail_bound < tol) return w;
        term *= rho * (size + r) / (r + 1);
      }
      break;
    }
    case ErrorFamily::custom_mixing:
      return detail::k_weights_custom(spec, h, delta_star2, tol);
  }
  throw numerical_error("k_weights: truncation cap R=" + std::to_string(kSeriesCap) +
                        " reached with tail bound " + std::to_string(w.tail_bound));
}

namespace detail {

inline void check_tail(const SeriesWeights& w, double max_tail, const char* who) {
  if (w.tail_bound > max_tail)
    throw numerical_error(std::string(who) + ": series tail bound " +
                          std::to_string(w.tail_bound) + " exceeds tolerance " +
                          std::to_string(max_tail));
}

}  // namespace detail

struct GenFParams {
  int q_dof = 1;  // numerator degrees of freedom (possibly shifted q + 2i)
  int m_dof = 1;  // n - p
  SeriesWeights series;
};

inline GenFParams make_gen_f_params(const EllipticalSpec& spec, int q_dof, int m_dof,
                                    double delta_star2, double tol = kSeriesTol) {
  if (q_dof < 1 || m_dof < 1)
    throw validation_error("make_gen_f_params: degrees of freedom must be >= 1");
  return GenFParams{q_dof, m_dof, k_weights(spec, 0, delta_star2, tol)};
}

/// pdf of the generalized non-central F distribution: the mixture of F-shape
/// kernels with numerator dof q + 2r weighted by terms[r].
inline double gen_f_pdf(const GenFParams& params, double x, double max_tail = 1e-8) {
  detail::check_tail(params.series, max_tail, "gen_f_pdf");
  if (!(x > 0.0)) return 0.0;
  const double q = params.q_dof, m = params.m_dof;
  const double lx = std::log(x), lqm = std::log(q / m), l1p = std::log1p(q * x / m);
  KahanSum sum;
  for (std::size_t r = 0; r < params.series.terms.size(); ++r) {
    const double qr = 0.5 * (q + 2.0 * r);
    const double lt = qr * lqm + (qr - 1.0) * lx - log_beta(qr, 0.5 * m) - (qr + 0.5 * m) * l1p;
    sum.add(params.series.terms[r] * std::exp(lt));
  }
  return sum.value();
}

/// cdf of the generalized non-central F distribution,
///   G*_{q,m}(x; d*2) = sum_r terms[r] I_{x'}[(q+2r)/2, m/2],
/// with x' = qx / (m + qx).
inline double gen_f_cdf(const GenFParams& params, double x, double max_tail = 1e-8) {
  detail::check_tail(params.series, max_tail, "gen_f_cdf");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double q = params.q_dof, m = params.m_dof;
  const double xp = q * x / (m + q * x);
  KahanSum sum;
  for (std::size_t r = 0; r < params.series.terms.size(); ++r)
    sum.add(params.series.terms[r] * incomplete_beta(xp, 0.5 * q + r, 0.5 * m));
  return sum.value();
}

/// G^(2-h)_{q+2i,m} series: sum_r terms[r] I_{x'}[(q+2i)/2 + r, m/2]. The
/// caller supplies x' (= q c / (m + q c) for a cut c on the statistic scale).
inline double g_series(const SeriesWeights& w, int q, int shift_i, int m, double x_prime,
                       double max_tail = 1e-8) {
  detail::check_tail(w, max_tail, "g_series");
  if (!(x_prime >= 0.0 && x_prime <= 1.0))
    throw validation_error("g_series: x_prime must lie in [0,1]");
  if (x_prime == 0.0) return 0.0;
  KahanSum sum;
  for (std::size_t r = 0; r < w.terms.size(); ++r)
    sum.add(w.terms[r] * incomplete_beta(x_prime, 0.5 * q + shift_i + r, 0.5 * m));
  return sum.value();
}

/// Cut c on the statistic scale -> the shared incomplete-beta argument.
inline double statistic_cut_to_x(int q, int m, double c) {
  if (std::isinf(c)) return 1.0;
  if (!(c >= 0.0)) return 0.0;
  return q * c / (m + q * c);
}

/// cdf of the generalized non-central chi-square distribution:
/// sum_r terms[r] H_{gamma+2r}(x) with H the central chi-square cdf.
inline double gen_chisq_cdf(const SeriesWeights& w, int gamma_dof, double x,
                            double max_tail = 1e-8) {
  detail::check_tail(w, max_tail, "gen_chisq_cdf");
  if (gamma_dof < 1) throw validation_error("gen_chisq_cdf: gamma_dof must be >= 1");
  if (!(x > 0.0)) return 0.0;
  KahanSum sum;
  for (std::size_t r = 0; r < w.terms.size(); ++r)
    sum.add(w.terms[r] * chi_squared_cdf(x, gamma_dof + 2.0 * r));
  return sum.value();
}

/// E^(2-h)[chi*_{q+s}^{-2}] (order 2) or E^(2-h)[chi*_{q+s}^{-4}] (order 4):
///   sum_r terms[r] (q+s-2+2r)^-1 [ * (q+s-4+2r)^-1 ].
inline double inv_chisq_moment(const SeriesWeights& w, int q, int s, int order,
                               double max_tail = 1e-8) {
  detail::check_tail(w, max_tail, "inv_chisq_moment");
  if (order != 2 && order != 4)
    throw validation_error("inv_chisq_moment: order must be 2 or 4");
  const int pole = (order == 2) ? q + s - 2 : q + s - 4;
  if (pole <= 0)
    throw numerical_error("inv_chisq_moment: series pole, q+s-" + std::to_string(order) +
                          " = " + std::to_string(pole) + " is nonpositive at r=0");
  KahanSum sum;
  for (std::size_t r = 0; r < w.terms.size(); ++r) {
    double den = q + s - 2.0 + 2.0 * r;
    if (order == 4) den *= q + s - 4.0 + 2.0 * r;
    sum.add(w.terms[r] / den);
  }
  return sum.value();
}

/// E^(2-h)[F^{-j}_{q+s,m} I(F_{q+s,m} < q d/(q+s))]: truncated inverse
/// moments of the generalized non-central F with numerator dof q+s. The
/// incomplete-beta argument is x = q d / (m + q d); j = 0 reduces to the
/// g_series mass at the same cut.
inline double truncated_f_inv_moment(const SeriesWeights& w, int q, int s, int m, int j,
                                     double d_cut, double max_tail = 1e-8) {
  detail::check_tail(w, max_tail, "truncated_f_inv_moment");
  if (j < 0) throw validation_error("truncated_f_inv_moment: j must be >= 0");
  if (!(d_cut > 0.0)) throw validation_error("truncated_f_inv_moment: d_cut must be positive");
  if (q + s - 2 * j <= 0)
    throw numerical_error("truncated_f_inv_moment: series pole, q+s-2j = " +
                          std::to_string(q + s - 2 * j) + " is nonpositive at r=0");
  const double x = statistic_cut_to_x(q, m, d_cut);
  const double scale = j * std::log((q + s) / static_cast<double>(m));
  KahanSum sum;
  for (std::size_t r = 0; r < w.terms.size(); ++r) {
    const double a_num = 0.5 * (q + s - 2 * j) + r;
    const double b_num = 0.5 * m + j;
    const double lcoef = scale + log_beta(a_num, b_num) - log_beta(0.5 * (q + s) + r, 0.5 * m);
    sum.add(w.terms[r] * std::exp(lcoef) * incomplete_beta(x, a_num, b_num));
  }
  return sum.value();
}

/// E^(2-h)[(1 - c F^{-1}_{q+s,m})^k I(F_{q+s,m} < q d/(q+s))] for k in {1,2},
/// expanded into the j = 0,1,2 truncated inverse moments.
inline double truncated_quadratic_expectation(const SeriesWeights& w, int q, int s, int m,
                                              double coef, int k, double d_cut,
                                              double max_tail = 1e-8) {
  if (k != 1 && k != 2)
    throw validation_error("truncated_quadratic_expectation: k must be 1 or 2");
  const double j0 = truncated_f_inv_moment(w, q, s, m, 0, d_cut, max_tail);
  if (coef == 0.0) return j0;
  const double j1 = truncated_f_inv_moment(w, q, s, m, 1, d_cut, max_tail);
  if (k == 1) return j0 - coef * j1;
  const double j2 = truncated_f_inv_moment(w, q, s, m, 2, d_cut, max_tail);
  return j0 - 2.0 * coef * j1 + coef * coef * j2;
}

// Convenience overloads building the weight sequence in place.

inline double gen_f_cdf(const EllipticalSpec& spec, int q, int m, double delta_star2, double x,
                        double tol = kSeriesTol) {
  return gen_f_cdf(make_gen_f_params(spec, q, m, delta_star2, tol), x);
}

inline double gen_f_pdf(const EllipticalSpec& spec, int q, int m, double delta_star2, double x,
                        double tol = kSeriesTol) {
  return gen_f_pdf(make_gen_f_params(spec, q, m, delta_star2, tol), x);
}

inline double gen_chisq_cdf(const EllipticalSpec& spec, int gamma_dof, double x,
                            double delta_star2, double tol = kSeriesTol) {
  return gen_chisq_cdf(k_weights(spec, 0, delta_star2, tol), gamma_dof, x);
}

inline double inv_chisq_moment(const EllipticalSpec& spec, int q, int s, int order, int h,
                               double delta_star2, double tol = kSeriesTol) {
  return inv_chisq_moment(k_weights(spec, h, delta_star2, tol), q, s, order);
}

inline double truncated_f_inv_moment(const EllipticalSpec& spec, int q, int s, int m, int j,
                                     double d_cut, int h, double delta_star2,
                                     double tol = kSeriesTol) {
  return truncated_f_inv_moment(k_weights(spec, h, delta_star2, tol), q, s, m, j, d_cut);
}

}  // namespace ellreg
