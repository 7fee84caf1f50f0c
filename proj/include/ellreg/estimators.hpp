#pragma once

// The five estimators, variance estimates, test statistic and shrink
// constant. FitContext caches every y-independent factorization so the Monte
// Carlo harness can refit cheaply.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "ellreg/errors.hpp"
#include "ellreg/model.hpp"
#include "ellreg/special.hpp"

namespace ellreg {

// Numerical degeneracy floors. An exact fit leaves S^2 at roundoff level
// rather than zero, and data sitting exactly on the restriction leave L_n
// near 1e-30; genuine draws from a continuous law land many orders of
// magnitude above these.
inline constexpr double kS2DegenerateRel = 1e-24;  // S^2 relative to y'V^-1 y/(n-p)
inline constexpr double kLnDegenerate = 1e-16;     // L_n on the F scale

/// Shrink constant d = (q-2) m / (q (m+2)); defined for q >= 3 and always
/// inside (0, 2m/(m+2)).
inline double shrink_constant(int q, int m) {
  if (q < 3)
    throw unsupported_error("shrink_constant: shrinkage requires q >= 3, got q=" +
                            std::to_string(q));
  if (m < 1) throw validation_error("shrink_constant: m must be >= 1");
  return (q - 2.0) * m / (q * (m + 2.0));
}

/// GLS estimate (X' V^-1 X)^-1 X' V^-1 y, computed through factorizations.
inline VectorXd fit_gls(const RegressionProblem& problem) {
  Eigen::LLT<MatrixXd> llt_V(problem.V);
  if (llt_V.info() != Eigen::Success)
    throw validation_error("fit_gls: V is not positive definite");
  const VectorXd Vinv_y = llt_V.solve(problem.y);
  const MatrixXd C = problem.X.transpose() * llt_V.solve(problem.X);
  Eigen::LLT<MatrixXd> llt_C(C);
  if (llt_C.info() != Eigen::Success)
    throw validation_error("fit_gls: X' V^-1 X is not positive definite");
  return llt_C.solve(problem.X.transpose() * Vinv_y);
}

/// S^2 = residual' V^-1 residual / (n - p).
inline double s2(const RegressionProblem& problem, const VectorXd& beta_gls) {
  const VectorXd r = problem.y - problem.X * beta_gls;
  Eigen::LLT<MatrixXd> llt_V(problem.V);
  return r.dot(llt_V.solve(r)) / (problem.n - problem.p);
}

/// S*^2 = restricted residual' V^-1 restricted residual / (n - p + q).
inline double s_star2(const RegressionProblem& problem, const LinearRestriction& restriction,
                      const VectorXd& beta_restricted) {
  const VectorXd r = problem.y - problem.X * beta_restricted;
  Eigen::LLT<MatrixXd> llt_V(problem.V);
  return r.dot(llt_V.solve(r)) / (problem.n - problem.p + restriction.q);
}

/// L_n = (H beta~ - h)' V1 (H beta~ - h) / (q S^2), V1 = (H C^-1 H')^-1.
inline double test_statistic(const RegressionProblem& problem,
                             const LinearRestriction& restriction, const VectorXd& beta_gls,
                             double s2_value) {
  Eigen::LLT<MatrixXd> llt_V(problem.V);
  const double y_scale = problem.y.dot(llt_V.solve(problem.y)) / (problem.n - problem.p);
  if (!(s2_value > kS2DegenerateRel * y_scale))
    throw degenerate_statistic_error("test_statistic: S^2 = 0 (exact fit), L_n undefined");
  const CoreMatrices core = core_matrices(problem, restriction, MatrixXd::Identity(problem.p, problem.p));
  const VectorXd gap = restriction.H * beta_gls - restriction.h;
  return gap.dot(core.V1 * gap) / (restriction.q * s2_value);
}

/// Preliminary test estimate: beta~ when L_n >= F_alpha, else the restricted
/// estimate (ties go to the unrestricted side).
inline VectorXd fit_pt(const VectorXd& beta_gls, const VectorXd& beta_restricted, double L_n,
                       double F_alpha) {
  if (!(F_alpha > 0.0)) throw validation_error("fit_pt: F_alpha must be positive");
  return L_n >= F_alpha ? beta_gls : beta_restricted;
}

/// Stein-type shrinkage: beta~ - d L^-1 (beta~ - beta^). Undefined at L = 0;
/// callers wanting a value there should use the positive-rule estimate.
inline VectorXd fit_stein(const VectorXd& beta_gls, const VectorXd& beta_restricted, double L_n,
                          double d) {
  if (!(L_n > 0.0))
    throw degenerate_statistic_error(
        "fit_stein: L_n = 0, shrinkage factor undefined; use the positive-rule estimator");
  return beta_gls - (d / L_n) * (beta_gls - beta_restricted);
}

/// Positive-rule shrinkage: beta^ + (1 - d/L) I(L > d) (beta~ - beta^);
/// equals the restricted estimate exactly for L <= d.
inline VectorXd fit_positive_rule(const VectorXd& beta_gls, const VectorXd& beta_restricted,
                                  double L_n, double d) {
  if (!(L_n > d)) return beta_restricted;
  return beta_restricted + (1.0 - d / L_n) * (beta_gls - beta_restricted);
}

struct EstimateBundle {
  VectorXd beta_gls;
  VectorXd beta_restricted;
  VectorXd beta_pt;
  std::optional<VectorXd> beta_s;    // absent when q < 3
  std::optional<VectorXd> beta_prs;  // absent when q < 3
  double s2 = 0.0;
  double s_star2 = 0.0;
  double L_n = 0.0;
  double F_alpha = 0.0;
  double alpha = 0.0;
  double d = std::numeric_limits<double>::quiet_NaN();
  int m = 0;
  bool shrinkage_supported = false;
  bool stein_degenerate = false;  // L_n = 0; beta_s holds the positive-rule value
};

/// Precomputed geometry for repeated fits against fresh responses. All
/// members are immutable after construction; fit() is const and safe to call
/// concurrently.
class FitContext {
 public:
  FitContext(MatrixXd X, MatrixXd V, MatrixXd H, VectorXd h, double alpha = 0.05)
      : X_(std::move(X)), H_(std::move(H)), h_(std::move(h)), alpha_(alpha) {
    n_ = static_cast<int>(X_.rows());
    p_ = static_cast<int>(X_.cols());
    q_ = static_cast<int>(H_.rows());
    m_ = n_ - p_;
    RegressionProblem pr = make_problem(VectorXd::Zero(n_), X_, std::move(V));
    validate_problem(pr, make_restriction(H_, h_));
    if (!(alpha_ > 0.0 && alpha_ < 1.0))
      throw validation_error("FitContext: alpha must lie in (0,1)");
    V_ = std::move(pr.V);

    Eigen::LLT<MatrixXd> llt_V(V_);
    chol_V_ = llt_V.matrixL();
    V_inv_ = llt_V.solve(MatrixXd::Identity(n_, n_));
    const MatrixXd Vinv_X = llt_V.solve(X_);
    C_ = X_.transpose() * Vinv_X;
    C_ = 0.5 * (C_ + C_.transpose());
    Eigen::LLT<MatrixXd> llt_C(C_);
    gls_map_ = llt_C.solve(Vinv_X.transpose());  // beta~ = gls_map * y
    C_inv_ = llt_C.solve(MatrixXd::Identity(p_, p_));
    const MatrixXd HCiHt = H_ * C_inv_ * H_.transpose();
    V1_ = Eigen::LLT<MatrixXd>(HCiHt).solve(MatrixXd::Identity(q_, q_));
    V1_ = 0.5 * (V1_ + V1_.transpose());
    restrict_map_ = C_inv_ * H_.transpose() * V1_;  // beta^ = beta~ - restrict_map (H beta~ - h)
    F_alpha_ = central_f_quantile(q_, m_, alpha_);
    shrinkage_ = q_ >= 3;
    if (shrinkage_) d_ = shrink_constant(q_, m_);
  }

  EstimateBundle fit(const VectorXd& y) const {
    EstimateBundle b;
    b.alpha = alpha_;
    b.F_alpha = F_alpha_;
    b.m = m_;
    b.shrinkage_supported = shrinkage_;
    if (shrinkage_) b.d = d_;

    b.beta_gls.noalias() = gls_map_ * y;
    VectorXd resid = y - X_ * b.beta_gls;
    b.s2 = resid.dot(V_inv_ * resid) / m_;
    const VectorXd gap = H_ * b.beta_gls - h_;
    b.beta_restricted = b.beta_gls - restrict_map_ * gap;
    resid = y - X_ * b.beta_restricted;
    b.s_star2 = resid.dot(V_inv_ * resid) / (m_ + q_);
    const double y_scale = y.dot(V_inv_ * y) / m_;
    if (!(b.s2 > kS2DegenerateRel * y_scale))
      throw degenerate_statistic_error("FitContext::fit: S^2 = 0 (exact fit), L_n undefined");
    b.L_n = gap.dot(V1_ * gap) / (q_ * b.s2);
    b.beta_pt = fit_pt(b.beta_gls, b.beta_restricted, b.L_n, F_alpha_);
    if (shrinkage_) {
      b.beta_prs = fit_positive_rule(b.beta_gls, b.beta_restricted, b.L_n, d_);
      if (b.L_n > kLnDegenerate) {
        b.beta_s = fit_stein(b.beta_gls, b.beta_restricted, b.L_n, d_);
      } else {
        b.stein_degenerate = true;
        b.beta_s = b.beta_prs;
      }
    }
    return b;
  }

  int n() const { return n_; }
  int p() const { return p_; }
  int q() const { return q_; }
  int m() const { return m_; }
  double alpha() const { return alpha_; }
  double f_alpha() const { return F_alpha_; }
  bool shrinkage_supported() const { return shrinkage_; }
  double d() const { return d_; }
  const MatrixXd& X() const { return X_; }
  const MatrixXd& V() const { return V_; }
  const MatrixXd& H() const { return H_; }
  const VectorXd& h() const { return h_; }
  const MatrixXd& C() const { return C_; }
  const MatrixXd& C_inv() const { return C_inv_; }
  const MatrixXd& V1() const { return V1_; }
  const MatrixXd& chol_V() const { return chol_V_; }

 private:
  MatrixXd X_, V_, H_;
  VectorXd h_;
  double alpha_;
  int n_ = 0, p_ = 0, q_ = 0, m_ = 0;
  MatrixXd V_inv_, chol_V_, C_, C_inv_, V1_, gls_map_, restrict_map_;
  double F_alpha_ = 0.0;
  double d_ = std::numeric_limits<double>::quiet_NaN();
  bool shrinkage_ = false;
};

/// One-shot convenience: validate, fit everything, return the bundle.
inline EstimateBundle fit_all(const RegressionProblem& problem,
                              const LinearRestriction& restriction, double alpha = 0.05) {
  validate_problem(problem, restriction);
  const FitContext ctx(problem.X, problem.V, restriction.H, restriction.h, alpha);
  return ctx.fit(problem.y);
}

}  // namespace ellreg
