#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ellreg/estimators.hpp"
#include "ellreg/model.hpp"
#include "ellreg/montecarlo.hpp"
#include "support/test_problems.hpp"

using namespace ellreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Noise orthogonal to the X columns in the V = I metric: leaves the GLS
// estimate at beta0 exactly while keeping S^2 positive.
VectorXd residual_space_noise(const MatrixXd& X, std::uint64_t seed) {
  ellreg::Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd v(X.rows());
  for (int i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  const VectorXd fitted =
      X * (X.transpose() * X).llt().solve(X.transpose() * v);
  return v - fitted;
}

}  // namespace

TEST_CASE("fit_gls: V = I reduces to ordinary least squares") {
  auto geom = test_problems::standard_geometry();
  ellreg::Rng rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd y(geom.n);
  for (int i = 0; i < geom.n; ++i) y(i) = gauss(rng);
  auto pr = make_problem(y, geom.X, geom.V);
  const VectorXd gls = fit_gls(pr);
  const VectorXd ols = (geom.X.transpose() * geom.X).llt().solve(geom.X.transpose() * y);
  CHECK((gls - ols).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_gls: interpolates noiseless data") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0(geom.p);
  beta0 << 1.0, -2.0, 0.5, 3.0, 0.0, -1.0;
  auto pr = make_problem(geom.X * beta0, geom.X, geom.V);
  CHECK((fit_gls(pr) - beta0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("s2 and s_star2: exact fit degenerates to zero, S*2 nonnegative") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0 = VectorXd::Ones(geom.p);
  auto pr = make_problem(geom.X * beta0, geom.X, geom.V);
  const VectorXd gls = fit_gls(pr);
  CHECK(s2(pr, gls) == Catch::Approx(0.0).margin(1e-18));
  auto restr = make_restriction(geom.H, geom.h);
  const FitContext ctx(geom.X, geom.V, geom.H, geom.h);
  CHECK_THROWS_AS(ctx.fit(pr.y), degenerate_statistic_error);
  // With noise everything is positive.
  pr.y += residual_space_noise(geom.X, 77);
  const EstimateBundle b = ctx.fit(pr.y);
  CHECK(b.s2 > 0.0);
  CHECK(b.s_star2 >= 0.0);
}

TEST_CASE("test_statistic: zero when the restriction holds exactly") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0 = VectorXd::Zero(geom.p);
  beta0.tail(2) << 1.5, -0.5;  // H beta0 = 0
  const VectorXd y = geom.X * beta0 + residual_space_noise(geom.X, 31);
  auto pr = make_problem(y, geom.X, geom.V);
  auto restr = make_restriction(geom.H, geom.h);
  const VectorXd gls = fit_gls(pr);
  CHECK((gls - beta0).cwiseAbs().maxCoeff() < 1e-10);
  const double L = test_statistic(pr, restr, gls, s2(pr, gls));
  CHECK(L == Catch::Approx(0.0).margin(1e-16));
  CHECK_THROWS_AS(test_statistic(pr, restr, gls, 0.0), degenerate_statistic_error);
}

TEST_CASE("test_statistic: null distribution is central F for both families", "[mc]") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0 = VectorXd::Zero(geom.p);
  beta0.tail(2) << 0.7, 1.1;  // on the restriction
  for (const auto spec : {EllipticalSpec::make_normal(1.3),
                          EllipticalSpec::make_student_t(5.0, 1.3)}) {
    MCConfig cfg;
    cfg.X = geom.X;
    cfg.V = geom.V;
    cfg.H = geom.H;
    cfg.h = geom.h;
    cfg.beta_true = beta0;
    cfg.spec = spec;
    cfg.replications = 4000;
    cfg.seed = 515;
    const auto dist = statistic_distribution(cfg);
    const double ks = ks_distance(dist.samples, [&](double x) {
      return central_f_cdf(x, geom.q, geom.n - geom.p);
    });
    CAPTURE(family_name(spec.family()));
    CHECK(ks < 1.36 / std::sqrt(4000.0));
  }
}

TEST_CASE("shrink_constant: exact values, bounds, and the q >= 3 gate") {
  CHECK(shrink_constant(3, 10) == 10.0 / 36.0);
  CHECK(shrink_constant(4, 24) == 48.0 / 104.0);
  CHECK_THROWS_AS(shrink_constant(2, 10), unsupported_error);
  for (int q = 3; q <= 8; ++q) {
    for (int m = 1; m <= 40; m += 3) {
      const double d = shrink_constant(q, m);
      CHECK(d > 0.0);
      CHECK(d < 2.0 * m / (m + 2.0));
    }
  }
}

TEST_CASE("fit_pt: selection and the boundary convention") {
  VectorXd gls(2), restr(2);
  gls << 1.0, 2.0;
  restr << 0.0, 0.0;
  const double fa = 3.0;
  CHECK(fit_pt(gls, restr, 0.0, fa) == restr);
  CHECK(fit_pt(gls, restr, fa, fa) == gls);  // tie goes to the unrestricted side
  CHECK(fit_pt(gls, restr, 2.999, fa) == restr);
  CHECK(fit_pt(gls, restr, 1e12, fa) == gls);
  CHECK(fit_pt(gls, restr, 1.0, 1e300) == restr);
}

TEST_CASE("fit_stein and fit_positive_rule: shrink geometry") {
  VectorXd gls(2), restr(2);
  gls << 2.0, 0.0;
  restr << 0.0, 0.0;
  const double d = 0.5;
  CHECK_THROWS_AS(fit_stein(gls, restr, 0.0, d), degenerate_statistic_error);
  // L = d: positive rule sits exactly at the restricted point.
  CHECK(fit_positive_rule(gls, restr, d, d) == restr);
  // L = d/2: the Stein factor is -1 (overshoot through the restricted point);
  // the positive rule clamps.
  const VectorXd s = fit_stein(gls, restr, 0.5 * d, d);
  CHECK((s - (2.0 * restr - gls)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(fit_positive_rule(gls, restr, 0.5 * d, d) == restr);
  // Large L: both tend to the unrestricted estimate.
  CHECK((fit_stein(gls, restr, 1e9, d) - gls).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit_positive_rule(gls, restr, 1e9, d) - gls).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("restriction identity: H beta^ = h on random problems") {
  ellreg::Rng rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 3 + static_cast<int>(rng() % 4);
    const int q = 1 + static_cast<int>(rng() % (p - 1));
    const int n = p + 5 + static_cast<int>(rng() % 12);
    MatrixXd X(n, p), H(q, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = gauss(rng);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < p; ++j) H(i, j) = gauss(rng);
    VectorXd h(q), y(n);
    for (int i = 0; i < q; ++i) h(i) = gauss(rng);
    for (int i = 0; i < n; ++i) y(i) = gauss(rng);
    MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = gauss(rng);
    const MatrixXd V = B * B.transpose() + n * MatrixXd::Identity(n, n);

    const FitContext ctx(X, V, H, h);
    const EstimateBundle b = ctx.fit(y);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    CAPTURE(rep, n, p, q);
    CHECK((H * b.beta_restricted - h).cwiseAbs().maxCoeff() < 1e-8 * scale);
  }
}

TEST_CASE("bundle invariants: PT selection and the positive-rule segment") {
  auto geom = test_problems::standard_geometry();
  const FitContext ctx(geom.X, geom.V, geom.H, geom.h);
  ellreg::Rng rng(909);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(geom.n);
    for (int i = 0; i < geom.n; ++i) y(i) = gauss(rng);
    const EstimateBundle b = ctx.fit(y);
    // PT is exactly one of the two endpoints.
    CHECK((b.beta_pt == b.beta_gls || b.beta_pt == b.beta_restricted));
    // Positive-rule identity recomputed from the bundle fields.
    REQUIRE(b.beta_prs.has_value());
    const VectorXd expected =
        b.L_n > b.d
            ? VectorXd(b.beta_restricted + (1.0 - b.d / b.L_n) * (b.beta_gls - b.beta_restricted))
            : b.beta_restricted;
    CHECK(*b.beta_prs == expected);
    // Stein in terms of the same fields.
    REQUIRE(b.beta_s.has_value());
    if (b.L_n > 0.0) {
      const VectorXd stein = b.beta_gls - (b.d / b.L_n) * (b.beta_gls - b.beta_restricted);
      CHECK(*b.beta_s == stein);
    }
  }
}

TEST_CASE("all five estimators coincide when the data sit on the restriction") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0 = VectorXd::Zero(geom.p);
  beta0.tail(2) << -1.0, 2.0;
  const VectorXd y = geom.X * beta0 + residual_space_noise(geom.X, 55);
  const FitContext ctx(geom.X, geom.V, geom.H, geom.h);
  const EstimateBundle b = ctx.fit(y);
  CHECK(b.L_n == Catch::Approx(0.0).margin(1e-16));
  CHECK((b.beta_restricted - b.beta_gls).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(b.beta_pt == b.beta_restricted);  // L_n < F_alpha selects the restricted point
  CHECK(*b.beta_prs == b.beta_restricted);
  CHECK(b.stein_degenerate);
  CHECK(*b.beta_s == *b.beta_prs);
}

TEST_CASE("equivariance: scaling y and h scales every estimator") {
  auto geom = test_problems::standard_geometry();
  ellreg::Rng rng(808);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd y(geom.n), h(geom.q);
  for (int i = 0; i < geom.n; ++i) y(i) = gauss(rng);
  for (int i = 0; i < geom.q; ++i) h(i) = gauss(rng);
  const double c = 3.7;
  const FitContext ctx(geom.X, geom.V, geom.H, h);
  const FitContext ctx_scaled(geom.X, geom.V, geom.H, (c * h).eval());
  const EstimateBundle a = ctx.fit(y);
  const EstimateBundle b = ctx_scaled.fit((c * y).eval());
  CHECK(b.L_n == Catch::Approx(a.L_n).epsilon(1e-12));
  CHECK((b.beta_gls - c * a.beta_gls).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b.beta_restricted - c * a.beta_restricted).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((b.beta_pt - c * a.beta_pt).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((*b.beta_s - c * (*a.beta_s)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((*b.beta_prs - c * (*a.beta_prs)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_all: q = 2 leaves shrinkage unsupported") {
  auto geom = test_problems::standard_geometry();
  const MatrixXd H2 = test_problems::leading_restriction(2, geom.p);
  ellreg::Rng rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd y(geom.n);
  for (int i = 0; i < geom.n; ++i) y(i) = gauss(rng);
  auto pr = make_problem(y, geom.X, geom.V);
  const EstimateBundle b = fit_all(pr, make_restriction(H2, VectorXd::Zero(2)));
  CHECK_FALSE(b.shrinkage_supported);
  CHECK_FALSE(b.beta_s.has_value());
  CHECK_FALSE(b.beta_prs.has_value());
  CHECK(std::isnan(b.d));
}

TEST_CASE("S^2 is unbiased for sigma^2_eps under both families", "[mc]") {
  auto geom = test_problems::standard_geometry();
  VectorXd beta0 = VectorXd::Ones(geom.p);
  for (const auto spec : {EllipticalSpec::make_normal(1.0),
                          EllipticalSpec::make_student_t(5.0, 1.0)}) {
    const FitContext ctx(geom.X, geom.V, geom.H, geom.h);
    KahanSum sum, sum_sq;
    const long n_rep = 10000;
    VectorXd eps(geom.n);
    for (long i = 0; i < n_rep; ++i) {
      Rng rng(derive_seed(616, i));
      sample_errors_with(spec, ctx.chol_V(), rng, eps);
      const EstimateBundle b = ctx.fit(geom.X * beta0 + eps);
      sum.add(b.s2);
      sum_sq.add(b.s2 * b.s2);
    }
    const double mean = sum.value() / n_rep;
    const double se =
        std::sqrt(std::max(0.0, sum_sq.value() / n_rep - mean * mean) / n_rep);
    CAPTURE(family_name(spec.family()), mean, se);
    CHECK(std::fabs(mean - spec.sigma2_eps()) <= 3.0 * se);
  }
}
