#pragma once

// Analytic biases and quadratic risks of the five estimators, dominance
// thresholds, the minimax range for the shrink constant, and the maximal
// risk-saving constants.
//
// Formula notes (all validated against the Monte Carlo oracle in the tests):
//  * The Stein risk is evaluated in a form that is correct for an arbitrary
//    shrink constant d*,
//      R_S = R_GLS - 2 d q s2e tr(A11) E1[chi_{q+2}^-2]
//            + 4 d q eta'A11 eta E2[chi_{q+4}^-4]
//            + d^2 q^2 (m+2)/m ( s2e tr(A11) E1[chi_{q+2}^-4]
//                                + eta'A11 eta E2[chi_{q+4}^-4] ),
//    which collapses to the compact textbook expression at the canonical
//    d = (q-2)m/(q(m+2)) through the identity
//      E1[chi_{q+2}^-2] - (q-2) E1[chi_{q+2}^-4] = D*2 E2[chi_{q+4}^-4].
//  * In the positive-rule risk the eta-weighted quadratic term mixes over
//    the (q+4)-shifted truncated F moments (cut q d/(q+4)) while the trace
//    term uses the (q+2) shift, and the cross term enters with sign +2; both
//    follow from the conditional quadratic-form decomposition and make
//    R_PRS <= R_S hold for every configuration.
//  * b5 = b4 - delta G2_{q+2}(d) + (qd/(q+2)) delta E2[F^-1 I(F <= qd/(q+2))].

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ellreg/distributions.hpp"
#include "ellreg/estimators.hpp"
#include "ellreg/model.hpp"

namespace ellreg {

struct RiskConfig {
  int n = 0, p = 0, q = 0;
  EllipticalSpec spec = EllipticalSpec::make_normal(1.0);
  MatrixXd W;
  CoreMatrices core;  // built with this W and beta_true
  VectorXd beta_true;
  double alpha = 0.05;
  // Shrink constant; NaN selects the canonical (q-2)m/(q(m+2)).
  double d = std::numeric_limits<double>::quiet_NaN();
  double series_tol = kSeriesTol;
  int m() const { return n - p; }
  bool shrinkage_supported() const { return q >= 3; }
  double delta_star2() const { return core.theta / spec.sigma2_eps(); }
  double shrink_d() const { return std::isnan(d) ? shrink_constant(q, m()) : d; }
};

/// Assemble a RiskConfig from a validated design. W defaults to C when empty.
inline RiskConfig make_risk_config(const MatrixXd& X, const MatrixXd& V, const MatrixXd& H,
                                   const VectorXd& h, const VectorXd& beta_true,
                                   const EllipticalSpec& spec, double alpha = 0.05,
                                   const MatrixXd& W = MatrixXd()) {
  RiskConfig cfg;
  cfg.n = static_cast<int>(X.rows());
  cfg.p = static_cast<int>(X.cols());
  cfg.q = static_cast<int>(H.rows());
  cfg.spec = spec;
  cfg.alpha = alpha;
  cfg.beta_true = beta_true;
  RegressionProblem pr = make_problem(VectorXd::Zero(cfg.n), X, V);
  const LinearRestriction restr = make_restriction(H, h);
  validate_problem(pr, restr);
  if (W.size() == 0) {
    const CoreMatrices pre = core_matrices(pr, restr, MatrixXd::Identity(cfg.p, cfg.p));
    cfg.W = pre.C;
  } else {
    cfg.W = W;
  }
  cfg.core = core_matrices(pr, restr, cfg.W, beta_true);
  return cfg;
}

struct DominanceThresholds {
  double restricted_lower = 0.0;   // Delta*^2 below this: restricted beats GLS
  double restricted_upper = 0.0;   // Delta*^2 above this: GLS beats restricted
  double pt_vs_gls = 0.0;          // PT beats GLS below this Delta*^2
  double restricted_vs_pt = 0.0;   // restricted beats PT below this Delta*^2
  bool stein_uniform = false;      // tr(A11)/ch_max >= (q+2)/2 with q >= 3
  int h0_category = 0;             // 1 or 2 (0 when shrinkage unsupported)
  bool category1_exact = false;    // PT beats PRSE at H0, exact G^(1) reading
  bool category1_literal = false;  // same with the 1 - alpha shortcut reading
  bool category2 = false;          // Stein beats PT at H0
  bool cond_cdf_reading = false;   // central F_{q+2,m} cdf at qF_a/(q+2) >= d
  bool cond_quantile_reading = false;  // F_{q+2,m} quantile at prob d <= qF_a/(q+2)
};

struct RiskReport {
  VectorXd b1, b2, b3, b4, b5;
  double risk_gls = 0.0;
  double risk_restricted = 0.0;
  double risk_pt = 0.0;
  double risk_s = std::numeric_limits<double>::quiet_NaN();
  double risk_prs = std::numeric_limits<double>::quiet_NaN();
  double delta_star2 = 0.0;
  double theta = 0.0;
  double sigma2_eps = 0.0;
  double tr_A11 = 0.0;
  double eta1_A11_eta1 = 0.0;
  double ch_min = 0.0;
  double ch_max = 0.0;
  double F_alpha = 0.0;
  double d = std::numeric_limits<double>::quiet_NaN();
  bool shrinkage_supported = false;
  DominanceThresholds thresholds;
};

namespace detail {

struct SeriesBundle {
  SeriesWeights h0, h1;
};

inline SeriesBundle build_weights(const EllipticalSpec& spec, double delta_star2, double tol) {
  return SeriesBundle{k_weights(spec, 0, delta_star2, tol), k_weights(spec, 1, delta_star2, tol)};
}

}  // namespace detail

/// Bias vectors b1..b5 of (GLS, restricted, PT, Stein, positive rule). The
/// last two require q >= 3 and come back as NaN vectors otherwise.
inline std::array<VectorXd, 5> bias_vectors(const RiskConfig& cfg) {
  if (!cfg.core.delta)
    throw validation_error("bias_vectors: core matrices were built without beta_true");
  const int q = cfg.q, m = cfg.m();
  const VectorXd& delta = *cfg.core.delta;
  const double d2 = cfg.delta_star2();
  const auto wb = detail::build_weights(cfg.spec, d2, cfg.series_tol);
  const double F_alpha = central_f_quantile(q, m, cfg.alpha);
  const double xa = statistic_cut_to_x(q, m, F_alpha);

  std::array<VectorXd, 5> b;
  b[0] = VectorXd::Zero(cfg.p);
  b[1] = -delta;
  b[2] = -g_series(wb.h0, q, 1, m, xa) * delta;
  if (cfg.shrinkage_supported()) {
    const double d = cfg.shrink_d();
    const double e2_2 = inv_chisq_moment(wb.h0, q, 2, 2);
    const double mass_d = g_series(wb.h0, q, 1, m, statistic_cut_to_x(q, m, d));
    const double tf1 = truncated_f_inv_moment(wb.h0, q, 2, m, 1, d);
    b[3] = -d * q * e2_2 * delta;
    b[4] = b[3] - mass_d * delta + (q * d / (q + 2.0)) * tf1 * delta;
  } else {
    b[3] = VectorXd::Constant(cfg.p, std::numeric_limits<double>::quiet_NaN());
    b[4] = b[3];
  }
  return b;
}

namespace detail {

// Risk pieces at a given noncentrality, shared by risk_all and the threshold
// fixed points.
struct RiskTerms {
  double G1_q2, G2_q2, G2_q4;
};

inline RiskTerms pt_terms(const EllipticalSpec& spec, int q, int m, double delta_star2,
                          double F_alpha, double tol) {
  const auto wb = build_weights(spec, delta_star2, tol);
  const double xa = statistic_cut_to_x(q, m, F_alpha);
  return RiskTerms{g_series(wb.h1, q, 1, m, xa), g_series(wb.h0, q, 1, m, xa),
                   g_series(wb.h0, q, 2, m, xa)};
}

// Damped fixed-point iteration with a bisection fallback for the implicit
// Delta*^2 thresholds.
template <typename F>
double solve_threshold(const F& rhs, double tol = 1e-8) {
  double x = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double fx = rhs(x);
    if (!std::isfinite(fx)) return std::numeric_limits<double>::infinity();
    const double next = 0.5 * (x + fx);
    if (std::fabs(next - x) < tol) return next;
    x = next;
  }
  // Bisection on x - rhs(x).
  double lo = 0.0, hi = std::max(1.0, 2.0 * x);
  int expand = 0;
  while (hi - rhs(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expand > 60)
      throw numerical_error("solve_threshold: fixed point did not converge; bracket [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - rhs(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < tol) return 0.5 * (lo + hi);
  }
  throw numerical_error("solve_threshold: bisection stalled on [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
}

}  // namespace detail

/// Dominance thresholds and H0 ordering category for one configuration.
inline DominanceThresholds dominance_thresholds(const RiskConfig& cfg) {
  const int q = cfg.q, m = cfg.m();
  DominanceThresholds th;
  th.restricted_lower = cfg.core.tr_A11 / cfg.core.ch_max_A11;
  th.restricted_upper = cfg.core.tr_A11 / cfg.core.ch_min_A11;

  const double F_alpha = central_f_quantile(q, m, cfg.alpha);
  const double bound = th.restricted_lower;
  const auto& spec = cfg.spec;
  const double tol = cfg.series_tol;

  th.pt_vs_gls = detail::solve_threshold([&](double x) {
    const auto t = detail::pt_terms(spec, q, m, x, F_alpha, tol);
    const double den = 2.0 * t.G2_q2 - t.G2_q4;
    if (den <= 1e-14) return std::numeric_limits<double>::infinity();
    return bound * t.G1_q2 / den;
  });
  th.restricted_vs_pt = detail::solve_threshold([&](double x) {
    const auto t = detail::pt_terms(spec, q, m, x, F_alpha, tol);
    const double den = 1.0 - 2.0 * t.G2_q2 + t.G2_q4;
    if (den <= 1e-14) return std::numeric_limits<double>::infinity();
    return bound * (1.0 - t.G1_q2) / den;
  });

  if (cfg.shrinkage_supported()) {
    th.stein_uniform = cfg.core.tr_A11 / cfg.core.ch_max_A11 >= 0.5 * (q + 2.0);
    const double d = cfg.shrink_d();
    // All H0 quantities: the weight series degenerates to its r = 0 term.
    const auto w0 = detail::build_weights(spec, 0.0, tol);
    const double G1_0 = g_series(w0.h1, q, 1, m, statistic_cut_to_x(q, m, F_alpha));
    const double TQ2_0 =
        truncated_quadratic_expectation(w0.h1, q, 2, m, q * d / (q + 2.0), 2, d);
    th.category1_exact = TQ2_0 <= G1_0 - d;
    th.category1_literal = TQ2_0 <= 1.0 - cfg.alpha - d;
    th.category2 = G1_0 < d;
    th.cond_cdf_reading = central_f_cdf(q * F_alpha / (q + 2.0), q + 2, m) >= d;
    th.cond_quantile_reading =
        central_f_quantile(q + 2, m, 1.0 - d) <= q * F_alpha / (q + 2.0);
    th.h0_category = th.category1_exact ? 1 : 2;
  }
  return th;
}

/// Analytic risks of all five estimators plus spectral and threshold data.
inline RiskReport risk_all(const RiskConfig& cfg) {
  if (!cfg.core.delta)
    throw validation_error("risk_all: core matrices were built without beta_true");
  const int q = cfg.q, m = cfg.m();
  const double s2e = cfg.spec.sigma2_eps();
  const double trA = cfg.core.tr_A11;
  const double eAe = cfg.core.eta1_A11_eta1;
  const double d2 = cfg.delta_star2();

  RiskReport rep;
  rep.delta_star2 = d2;
  rep.theta = cfg.core.theta;
  rep.sigma2_eps = s2e;
  rep.tr_A11 = trA;
  rep.eta1_A11_eta1 = eAe;
  rep.ch_min = cfg.core.ch_min_A11;
  rep.ch_max = cfg.core.ch_max_A11;
  rep.F_alpha = central_f_quantile(q, m, cfg.alpha);
  rep.shrinkage_supported = cfg.shrinkage_supported();

  const auto wb = detail::build_weights(cfg.spec, d2, cfg.series_tol);
  const double xa = statistic_cut_to_x(q, m, rep.F_alpha);

  rep.risk_gls = s2e * Eigen::LLT<MatrixXd>(cfg.core.C).solve(cfg.W).trace();
  rep.risk_restricted = rep.risk_gls - s2e * trA + eAe;

  const double G1_q2 = g_series(wb.h1, q, 1, m, xa);
  const double G2_q2 = g_series(wb.h0, q, 1, m, xa);
  const double G2_q4 = g_series(wb.h0, q, 2, m, xa);
  rep.risk_pt = rep.risk_gls - s2e * trA * G1_q2 + eAe * (2.0 * G2_q2 - G2_q4);

  if (rep.shrinkage_supported) {
    const double d = cfg.shrink_d();
    rep.d = d;
    const double E1_2 = inv_chisq_moment(wb.h1, q, 2, 2);
    const double E1_4 = inv_chisq_moment(wb.h1, q, 2, 4);
    const double E2_44 = inv_chisq_moment(wb.h0, q, 4, 4);
    rep.risk_s = rep.risk_gls - 2.0 * d * q * s2e * trA * E1_2 + 4.0 * d * q * eAe * E2_44 +
                 d * d * q * q * (m + 2.0) / m * (s2e * trA * E1_4 + eAe * E2_44);

    const double TQ2 = truncated_quadratic_expectation(wb.h1, q, 2, m, q * d / (q + 2.0), 2, d);
    const double TQ4 = truncated_quadratic_expectation(wb.h0, q, 4, m, q * d / (q + 4.0), 2, d);
    const double T1 = truncated_quadratic_expectation(wb.h0, q, 2, m, q * d / (q + 2.0), 1, d);
    rep.risk_prs = rep.risk_s - s2e * trA * TQ2 - eAe * TQ4 + 2.0 * eAe * T1;
  }

  const auto biases = bias_vectors(cfg);
  rep.b1 = biases[0];
  rep.b2 = biases[1];
  rep.b3 = biases[2];
  rep.b4 = biases[3];
  rep.b5 = biases[4];
  rep.thresholds = dominance_thresholds(cfg);
  return rep;
}

struct MinimaxRange {
  double lower = 0.0;
  double upper = 0.0;
  double optimum = 0.0;
};

/// Shrink constants d* for which the Stein estimator is minimax: the interval
/// (0, 2m/(m+2)], with the largest stated risk reduction at m/(m+2).
inline MinimaxRange minimax_range(int m) {
  if (m < 1) throw validation_error("minimax_range: m must be >= 1");
  return MinimaxRange{0.0, 2.0 * m / (m + 2.0), m / (m + 2.0)};
}

/// Maximal relative risk saving of the Stein estimator under the null with
/// W = C: m(q-2)/(p(m+2)) for normal errors, scaled by (gamma-2)/gamma for
/// Student-t. No closed form is available for a custom mixing.
inline double max_risk_saving(int p, int q, int m, const EllipticalSpec& spec) {
  if (q < 3) throw unsupported_error("max_risk_saving: requires q >= 3");
  if (p < 1 || m < 1) throw validation_error("max_risk_saving: need p >= 1 and m >= 1");
  const double base = m * (q - 2.0) / (p * (m + 2.0));
  switch (spec.family()) {
    case ErrorFamily::normal:
      return base;
    case ErrorFamily::student_t:
      return base * (spec.gamma() - 2.0) / spec.gamma();
    default:
      throw unsupported_error("max_risk_saving: no closed form for a custom mixing");
  }
}

/// Default noncentrality sweep grid: 0 plus 41 log-spaced points on
/// [0.05, 50].
inline std::vector<double> default_delta_grid() {
  std::vector<double> grid;
  grid.push_back(0.0);
  const double lo = std::log10(0.05), hi = std::log10(50.0);
  for (int i = 0; i < 41; ++i) grid.push_back(std::pow(10.0, lo + (hi - lo) * i / 40.0));
  return grid;
}

}  // namespace ellreg
