#pragma once

// Regression problem types, validation, the derived core matrices used by the
// risk analysis, and the scale-mixture error sampler.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>

#include "ellreg/elliptical.hpp"
#include "ellreg/errors.hpp"
#include "ellreg/rng.hpp"

namespace ellreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Singular values below rank_tolerance * s_max count as zero.
inline constexpr double kRankTolerance = 1e-10;

struct RegressionProblem {
  VectorXd y;  // n responses
  MatrixXd X;  // n x p design, full column rank
  MatrixXd V;  // n x n symmetric positive definite scatter
  int n = 0;
  int p = 0;
};

struct LinearRestriction {
  MatrixXd H;  // q x p, full row rank
  VectorXd h;  // q
  int q = 0;
};

inline RegressionProblem make_problem(VectorXd y, MatrixXd X, MatrixXd V) {
  RegressionProblem pr;
  pr.n = static_cast<int>(X.rows());
  pr.p = static_cast<int>(X.cols());
  pr.y = std::move(y);
  pr.X = std::move(X);
  pr.V = std::move(V);
  return pr;
}

inline LinearRestriction make_restriction(MatrixXd H, VectorXd h) {
  LinearRestriction r;
  r.q = static_cast<int>(H.rows());
  r.H = std::move(H);
  r.h = std::move(h);
  return r;
}

namespace detail {

inline int numeric_rank(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cut = kRankTolerance * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

}  // namespace detail

/// Check every type invariant of the pair: dimensions agree, n > p >= 1,
/// 1 <= q < p, X has full column rank, H full row rank, V symmetric positive
/// definite. Throws validation_error naming the offending matrix.
inline void validate_problem(const RegressionProblem& problem,
                             const LinearRestriction& restriction) {
  const int n = problem.n, p = problem.p, q = restriction.q;
  if (p < 1 || n <= p)
    throw validation_error("validate_problem: need n > p >= 1, got n=" + std::to_string(n) +
                           " p=" + std::to_string(p));
  if (problem.y.size() != n)
    throw validation_error("validate_problem: y has length " + std::to_string(problem.y.size()) +
                           ", expected n=" + std::to_string(n));
  if (problem.V.rows() != n || problem.V.cols() != n)
    throw validation_error("validate_problem: V must be n x n");
  if (q < 1 || q >= p)
    throw validation_error("validate_problem: need 1 <= q < p, got q=" + std::to_string(q) +
                           " p=" + std::to_string(p));
  if (restriction.H.cols() != p)
    throw validation_error("validate_problem: H has " + std::to_string(restriction.H.cols()) +
                           " columns, expected p=" + std::to_string(p));
  if (restriction.h.size() != q)
    throw validation_error("validate_problem: h has length " + std::to_string(restriction.h.size()) +
                           ", expected q=" + std::to_string(q));
  if ((problem.V - problem.V.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, problem.V.cwiseAbs().maxCoeff()))
    throw validation_error("validate_problem: V is not symmetric");
  if (detail::numeric_rank(problem.X) < p)
    throw validation_error("validate_problem: X is rank deficient (rank < p)");
  if (detail::numeric_rank(restriction.H) < q)
    throw validation_error("validate_problem: H is rank deficient (rank < q)");
  Eigen::LLT<MatrixXd> llt(problem.V);
  if (llt.info() != Eigen::Success)
    throw validation_error("validate_problem: V is not positive definite");
}

/// Core matrices of the restricted-estimation geometry. R denotes the
/// idempotent matrix C^(-1/2) H' V1 H C^(-1/2); Q is the orthogonal matrix
/// with Q R Q' = diag(I_q, 0); A = Q C^(-1/2) W C^(-1/2) Q' and A11 is its
/// leading q x q block.
struct CoreMatrices {
  MatrixXd C;           // X' V^-1 X
  MatrixXd C_inv;
  MatrixXd V1;          // (H C^-1 H')^-1
  MatrixXd V2;          // C^-1 - C^-1 H' V1 H C^-1
  MatrixXd C_half;      // symmetric square root of C
  MatrixXd C_half_inv;
  MatrixXd Q;
  MatrixXd A;
  MatrixXd A11;
  double tr_A11 = 0.0;
  double ch_min_A11 = 0.0;
  double ch_max_A11 = 0.0;
  // Populated when beta_true is supplied.
  std::optional<VectorXd> delta;    // C^-1 H' V1 (H beta - h)
  std::optional<VectorXd> eta1;     // first q components of Q C^(1/2) delta
  double theta = 0.0;               // (H beta - h)' V1 (H beta - h)
  double eta1_A11_eta1 = 0.0;       // equals delta' W delta
};

/// Build the core matrices for a validated problem, restriction and SPD
/// weight matrix W. Eigenvalues of R are clustered to {0, 1} with threshold
/// 0.5 and Q's rows are ordered so the unit-eigenvalue directions come first.
inline CoreMatrices core_matrices(const RegressionProblem& problem,
                                  const LinearRestriction& restriction, const MatrixXd& W,
                                  const std::optional<VectorXd>& beta_true = std::nullopt) {
  const int p = problem.p, q = restriction.q;
  if (W.rows() != p || W.cols() != p)
    throw validation_error("core_matrices: W must be p x p");

  CoreMatrices core;
  Eigen::LLT<MatrixXd> llt_V(problem.V);
  if (llt_V.info() != Eigen::Success)
    throw validation_error("core_matrices: V is not positive definite");
  const MatrixXd Vinv_X = llt_V.solve(problem.X);
  core.C = problem.X.transpose() * Vinv_X;
  core.C = 0.5 * (core.C + core.C.transpose());

  Eigen::LLT<MatrixXd> llt_C(core.C);
  if (llt_C.info() != Eigen::Success)
    throw validation_error("core_matrices: C = X'V^-1 X is not positive definite");
  core.C_inv = llt_C.solve(MatrixXd::Identity(p, p));
  core.C_inv = 0.5 * (core.C_inv + core.C_inv.transpose());

  const MatrixXd HCiHt = restriction.H * core.C_inv * restriction.H.transpose();
  Eigen::LLT<MatrixXd> llt_HCiHt(HCiHt);
  if (llt_HCiHt.info() != Eigen::Success)
    throw validation_error("core_matrices: H C^-1 H' is not positive definite");
  core.V1 = llt_HCiHt.solve(MatrixXd::Identity(q, q));
  core.V1 = 0.5 * (core.V1 + core.V1.transpose());

  const MatrixXd CiHt = core.C_inv * restriction.H.transpose();
  core.V2 = core.C_inv - CiHt * core.V1 * CiHt.transpose();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_C(core.C);
  if (eig_C.info() != Eigen::Success)
    throw validation_error("core_matrices: eigendecomposition of C failed");
  const VectorXd half = eig_C.eigenvalues().cwiseSqrt();
  core.C_half = eig_C.eigenvectors() * half.asDiagonal() * eig_C.eigenvectors().transpose();
  core.C_half_inv = eig_C.eigenvectors() * half.cwiseInverse().asDiagonal() *
                    eig_C.eigenvectors().transpose();

  MatrixXd R = core.C_half_inv * restriction.H.transpose() * core.V1 * restriction.H *
               core.C_half_inv;
  R = 0.5 * (R + R.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_R(R);
  if (eig_R.info() != Eigen::Success)
    throw validation_error("core_matrices: eigendecomposition of R failed");
  // Ascending eigenvalues: the q unit eigenvalues sit at the end.
  core.Q.resize(p, p);
  int row = 0;
  for (int i = p - 1; i >= 0; --i)
    if (eig_R.eigenvalues()(i) > 0.5) core.Q.row(row++) = eig_R.eigenvectors().col(i).transpose();
  if (row != q)
    throw numerical_error("core_matrices: R has " + std::to_string(row) +
                          " unit eigenvalues, expected q=" + std::to_string(q));
  for (int i = 0; i < p; ++i)
    if (!(eig_R.eigenvalues()(i) > 0.5)) core.Q.row(row++) = eig_R.eigenvectors().col(i).transpose();

  core.A = core.Q * core.C_half_inv * W * core.C_half_inv * core.Q.transpose();
  core.A = 0.5 * (core.A + core.A.transpose());
  core.A11 = core.A.topLeftCorner(q, q);
  core.tr_A11 = core.A11.trace();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_A11(core.A11);
  core.ch_min_A11 = eig_A11.eigenvalues().minCoeff();
  core.ch_max_A11 = eig_A11.eigenvalues().maxCoeff();

  if (beta_true) {
    if (beta_true->size() != p)
      throw validation_error("core_matrices: beta_true must have length p");
    const VectorXd gap = restriction.H * (*beta_true) - restriction.h;
    core.delta = CiHt * (core.V1 * gap);
    core.theta = gap.dot(core.V1 * gap);
    const VectorXd eta_full = core.Q * (core.C_half * (*core.delta));
    core.eta1 = eta_full.head(q);
    core.eta1_A11_eta1 = core.eta1->dot(core.A11 * (*core.eta1));
  }
  return core;
}

/// Draw one error vector: t from the mixing law, then eps | t is
/// N_n(0, t^-1 sigma^2 V). Deterministic for a fixed seed.
inline VectorXd sample_errors(const EllipticalSpec& spec, int n, const MatrixXd& V,
                              std::uint64_t seed) {
  Eigen::LLT<MatrixXd> llt(V);
  if (llt.info() != Eigen::Success)
    throw validation_error("sample_errors: V is not positive definite");
  Rng rng(seed);
  const double t = spec.sample_t(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = gauss(rng);
  const VectorXd correlated = llt.matrixL() * z;
  return std::sqrt(spec.sigma2() / t) * correlated;
}

/// Same draw with the Cholesky factor of V precomputed (Monte Carlo path).
inline void sample_errors_with(const EllipticalSpec& spec, const MatrixXd& chol_V_lower,
                               Rng& rng, VectorXd& out) {
  const double t = spec.sample_t(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = static_cast<int>(chol_V_lower.rows());
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = gauss(rng);
  out.noalias() = std::sqrt(spec.sigma2() / t) * (chol_V_lower * z);
}

}  // namespace ellreg
