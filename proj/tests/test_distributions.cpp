#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ellreg/distributions.hpp"
#include "support/oracles.hpp"

using namespace ellreg;

namespace {

const EllipticalSpec kNormal = EllipticalSpec::make_normal(1.0);
const EllipticalSpec kStudent5 = EllipticalSpec::make_student_t(5.0, 1.0);

// The Student-t mixing density; feeding it through the quadrature route must
// reproduce the closed-form weights.
EllipticalSpec student_as_custom(double gamma) {
  return EllipticalSpec::make_custom(
      [gamma](double t) {
        const double a = 0.5 * gamma;
        return std::exp(a * std::log(a) - std::lgamma(a) + (a - 1.0) * std::log(t) - a * t);
      },
      false, 1.0);
}

}  // namespace

TEST_CASE("k_weights: delta = 0 collapses to a unit point mass for both h") {
  for (int h : {0, 1}) {
    for (const auto* spec : {&kNormal, &kStudent5}) {
      const SeriesWeights w = k_weights(*spec, h, 0.0);
      REQUIRE(w.terms.size() == 1);
      CHECK(w.terms[0] == Catch::Approx(1.0).margin(1e-12));
      CHECK(w.tail_bound < 1e-12);
    }
  }
}

TEST_CASE("k_weights: normal weights are the Poisson pmf") {
  const SeriesWeights w = k_weights(kNormal, 0, 2.0);
  for (std::size_t r = 0; r < w.terms.size(); ++r)
    CHECK(w.terms[r] == Catch::Approx(oracles::poisson_pmf(static_cast<int>(r), 1.0))
                            .margin(1e-14));
  // h = 1 coincides with h = 0 in the normal case (t is a point mass at 1).
  const SeriesWeights w1 = k_weights(kNormal, 1, 2.0);
  REQUIRE(w1.terms.size() == w.terms.size());
  for (std::size_t r = 0; r < w.terms.size(); ++r)
    CHECK(w1.terms[r] == Catch::Approx(w.terms[r]).margin(1e-14));
}

TEST_CASE("k_weights: Student-t closed form matches the quadrature route") {
  const EllipticalSpec custom = student_as_custom(5.0);
  CHECK(custom.psi_factor() == Catch::Approx(5.0 / 3.0).margin(1e-8));
  for (int h : {0, 1}) {
    const SeriesWeights closed = k_weights(kStudent5, h, 2.0, 1e-10);
    const SeriesWeights quad = k_weights(custom, h, 2.0, 1e-10);
    const std::size_t n = std::min(closed.terms.size(), quad.terms.size());
    REQUIRE(n >= 10);
    for (std::size_t r = 0; r < n; ++r) {
      CAPTURE(h, r);
      CHECK(quad.terms[r] == Catch::Approx(closed.terms[r]).margin(1e-8));
    }
  }
}

TEST_CASE("k_weights: unit total mass for probability mixings") {
  for (const double d2 : {0.0, 1.0, 5.0, 20.0}) {
    for (int h : {0, 1}) {
      for (const auto* spec : {&kNormal, &kStudent5}) {
        const SeriesWeights w = k_weights(*spec, h, d2);
        KahanSum sum;
        for (double t : w.terms) sum.add(t);
        CAPTURE(d2, h, spec->psi_factor());
        CHECK(sum.value() == Catch::Approx(1.0).margin(1e-8));
      }
    }
  }
}

TEST_CASE("k_weights: truncation cap raises once the tail cannot be met") {
  const auto heavy = EllipticalSpec::make_student_t(2.2, 1.0);
  CHECK_THROWS_AS(k_weights(heavy, 0, 300.0), numerical_error);
}

TEST_CASE("gen_f_cdf: central case equals the incomplete-beta F cdf") {
  const GenFParams params = make_gen_f_params(kNormal, 3, 12, 0.0);
  for (int i = 1; i <= 20; ++i) {
    const double x = 0.25 * i;
    CHECK(gen_f_cdf(params, x) == Catch::Approx(central_f_cdf(x, 3, 12)).margin(1e-10));
  }
  // Student-t under the null is the same central F: Corollary-style check.
  const GenFParams tparams = make_gen_f_params(kStudent5, 3, 12, 0.0);
  for (int i = 1; i <= 20; ++i) {
    const double x = 0.25 * i;
    CHECK(gen_f_cdf(tparams, x) == Catch::Approx(central_f_cdf(x, 3, 12)).margin(1e-10));
  }
}

TEST_CASE("gen_f_cdf: normal mixing reproduces the noncentral F law") {
  const GenFParams params = make_gen_f_params(kNormal, 3, 12, 3.0);
  for (const double x : {0.25, 0.8, 1.7, 3.1, 6.0})
    CHECK(gen_f_cdf(params, x) ==
          Catch::Approx(oracles::noncentral_f_cdf(x, 3, 12, 3.0)).margin(1e-9));
}

TEST_CASE("gen_f_cdf: limits and the quantile round trip") {
  const GenFParams params = make_gen_f_params(kStudent5, 4, 24, 1.5);
  CHECK(gen_f_cdf(params, 0.0) == 0.0);
  CHECK(gen_f_cdf(params, 1e9) == Catch::Approx(1.0).margin(1e-9));
  const double fa = central_f_quantile(4, 24, 0.05);
  const GenFParams null_params = make_gen_f_params(kStudent5, 4, 24, 0.0);
  CHECK(gen_f_cdf(null_params, fa) == Catch::Approx(0.95).margin(1e-10));
}

TEST_CASE("gen_f_cdf: monotone in x, nonincreasing in the noncentrality") {
  for (const auto* spec : {&kNormal, &kStudent5}) {
    double prev = -1.0;
    const GenFParams params = make_gen_f_params(*spec, 4, 20, 2.0);
    for (int i = 0; i <= 30; ++i) {
      const double v = gen_f_cdf(params, 0.3 * i);
      CHECK(v >= prev - 1e-14);
      prev = v;
    }
    double prev_p = 2.0;
    for (const double d2 : {0.0, 0.5, 1.0, 2.0, 5.0, 12.0}) {
      const double v = gen_f_cdf(make_gen_f_params(*spec, 4, 20, d2), 1.3);
      CHECK(v <= prev_p + 1e-12);
      prev_p = v;
    }
  }
}

TEST_CASE("gen_f_pdf: central case and the noncentral oracle") {
  const GenFParams central = make_gen_f_params(kNormal, 5, 15, 0.0);
  for (const double x : {0.3, 1.0, 2.4})
    CHECK(gen_f_pdf(central, x) == Catch::Approx(central_f_pdf(x, 5, 15)).margin(1e-12));
  const GenFParams nc = make_gen_f_params(kNormal, 3, 12, 3.0);
  for (const double x : {0.3, 1.0, 2.4, 5.0})
    CHECK(gen_f_pdf(nc, x) ==
          Catch::Approx(oracles::noncentral_f_pdf(x, 3, 12, 3.0)).margin(1e-9));
}

TEST_CASE("gen_f_pdf: integrates to one under a Student-t mixing") {
  const GenFParams params = make_gen_f_params(EllipticalSpec::make_student_t(6.0, 1.0), 4, 16,
                                              1.0);
  const double total = integrate_zero_to_inf(
      [&params](double x) { return gen_f_pdf(params, x); }, 1e-9);
  CHECK(total == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("gen_f_pdf/cdf: numerical derivative consistency") {
  for (const auto* spec : {&kNormal, &kStudent5}) {
    const GenFParams params = make_gen_f_params(*spec, 4, 24, 3.0);
    for (const double x : {0.4, 1.1, 2.6}) {
      const double h = 1e-4;
      const double num = (gen_f_cdf(params, x + h) - gen_f_cdf(params, x - h)) / (2.0 * h);
      CHECK(num == Catch::Approx(gen_f_pdf(params, x)).margin(1e-5));
    }
  }
}

TEST_CASE("g_series: single-term reduction and total mass") {
  const int q = 4, m = 20;
  for (int h : {0, 1}) {
    const SeriesWeights w0 = k_weights(kStudent5, h, 0.0);
    for (int i : {0, 1, 2}) {
      const double xp = 0.37;
      CHECK(g_series(w0, q, i, m, xp) ==
            Catch::Approx(incomplete_beta(xp, 0.5 * q + i, 0.5 * m)).margin(1e-12));
    }
    const SeriesWeights w = k_weights(kStudent5, h, 4.0);
    CHECK(g_series(w, q, 1, m, 1.0) == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("g_series: normal case equals the Poisson-mixed beta mass") {
  const int q = 4, m = 20, i = 1;
  const double d2 = 2.5, xp = 0.42;
  double oracle = 0.0;
  for (int r = 0; r < 200; ++r)
    oracle += oracles::poisson_pmf(r, 0.5 * d2) * incomplete_beta(xp, 0.5 * q + i + r, 0.5 * m);
  const SeriesWeights w = k_weights(kNormal, 0, d2);
  CHECK(g_series(w, q, i, m, xp) == Catch::Approx(oracle).margin(1e-10));
}

TEST_CASE("gen_chisq_cdf: central, noncentral oracle, monotone") {
  const SeriesWeights w0 = k_weights(kNormal, 0, 0.0);
  for (const double x : {0.5, 2.0, 6.5})
    CHECK(gen_chisq_cdf(w0, 5, x) == Catch::Approx(chi_squared_cdf(x, 5.0)).margin(1e-12));

  const SeriesWeights w = k_weights(kNormal, 0, 2.0);
  for (const double x : {0.5, 2.0, 6.5, 12.0})
    CHECK(gen_chisq_cdf(w, 5, x) ==
          Catch::Approx(oracles::noncentral_chisq_cdf(x, 5, 2.0)).margin(1e-9));

  const SeriesWeights wt = k_weights(kStudent5, 0, 3.0);
  double prev = -1.0;
  for (int i = 1; i <= 50; ++i) {
    const double v = gen_chisq_cdf(wt, 4, 0.5 * i);
    CHECK(v >= prev - 1e-14);
    prev = v;
  }
}

TEST_CASE("gen_chisq_cdf: Student-t mixing against the conditional draw oracle", "[mc]") {
  const SeriesWeights w = k_weights(kStudent5, 0, 2.0);
  for (const double x : {2.0, 6.0, 12.0}) {
    const double series = gen_chisq_cdf(w, 5, x);
    const auto mc = oracles::mc_chisq_functional(
        kStudent5, 5, 2.0, 0, [x](double v) { return v <= x ? 1.0 : 0.0; }, 1000000, 37);
    CAPTURE(x);
    CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
  }
}

TEST_CASE("inv_chisq_moment: single-term value at delta = 0") {
  const SeriesWeights w = k_weights(kStudent5, 0, 0.0);
  CHECK(inv_chisq_moment(w, 4, 2, 2) == Catch::Approx(1.0 / 4.0).margin(1e-14));
  CHECK(inv_chisq_moment(w, 4, 2, 4) == Catch::Approx(1.0 / 8.0).margin(1e-14));
}

TEST_CASE("inv_chisq_moment: Monte Carlo oracle, normal, q+s = 6", "[mc]") {
  const SeriesWeights w = k_weights(kNormal, 0, 2.0);
  const double series = inv_chisq_moment(w, 4, 2, 2);
  const auto mc = oracles::mc_chisq_functional(
      kNormal, 6, 2.0, 0, [](double x) { return 1.0 / x; }, 1000000, 17);
  CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
}

TEST_CASE("inv_chisq_moment: Monte Carlo oracle, Student-t, h = 1", "[mc]") {
  const SeriesWeights w = k_weights(kStudent5, 1, 2.0);
  const double series = inv_chisq_moment(w, 4, 2, 2);
  const auto mc = oracles::mc_chisq_functional(
      kStudent5, 6, 2.0, 1, [](double x) { return 1.0 / x; }, 1000000, 18);
  CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
}

TEST_CASE("inv_chisq_moment: recurrence identity between orders") {
  // E2[chi_q^-2] - E2[chi_{q+2}^-2] = 2 E2[chi_{q+2}^-4], termwise for any
  // mixing and noncentrality.
  for (const auto* spec : {&kNormal, &kStudent5}) {
    for (const double d2 : {0.0, 1.0, 4.0, 9.0}) {
      const SeriesWeights w = k_weights(*spec, 0, d2);
      const double lhs = inv_chisq_moment(w, 4, 0, 2) - inv_chisq_moment(w, 4, 2, 2);
      const double rhs = 2.0 * inv_chisq_moment(w, 4, 2, 4);
      CHECK(lhs == Catch::Approx(rhs).margin(1e-10));
    }
  }
}

TEST_CASE("inv_chisq_moment: cross-superscript identity") {
  // E1[chi_{q+2}^-2] - (q-2) E1[chi_{q+2}^-4] = Delta*^2 E2[chi_{q+4}^-4].
  const int q = 4;
  for (const auto* spec : {&kNormal, &kStudent5}) {
    for (const double d2 : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      const SeriesWeights w1 = k_weights(*spec, 1, d2);
      const SeriesWeights w0 = k_weights(*spec, 0, d2);
      const double lhs =
          inv_chisq_moment(w1, q, 2, 2) - (q - 2.0) * inv_chisq_moment(w1, q, 2, 4);
      const double rhs = d2 * inv_chisq_moment(w0, q, 4, 4);
      CAPTURE(d2);
      CHECK(lhs == Catch::Approx(rhs).margin(1e-9));
    }
  }
}

TEST_CASE("inv_chisq_moment: pole guard") {
  const SeriesWeights w = k_weights(kNormal, 0, 1.0);
  CHECK_THROWS_AS(inv_chisq_moment(w, 2, 0, 2), numerical_error);
  CHECK_THROWS_AS(inv_chisq_moment(w, 3, 1, 4), numerical_error);
}

TEST_CASE("truncated_f_inv_moment: j = 0 equals the g_series mass") {
  const SeriesWeights w = k_weights(kStudent5, 0, 2.0);
  const int q = 4, m = 20;
  for (const double d : {0.3, 0.7, 1.8}) {
    const double xp = statistic_cut_to_x(q, m, d);
    CHECK(truncated_f_inv_moment(w, q, 2, m, 0, d) ==
          Catch::Approx(g_series(w, q, 1, m, xp)).margin(1e-12));
    CHECK(truncated_f_inv_moment(w, q, 4, m, 0, d) ==
          Catch::Approx(g_series(w, q, 2, m, xp)).margin(1e-12));
  }
}

TEST_CASE("truncated_f_inv_moment: infinite cut recovers the full inverse moment") {
  // E[F^-1_{5,m}] = 5/3 for the central F, any m.
  const SeriesWeights w = k_weights(kNormal, 0, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(truncated_f_inv_moment(w, 3, 2, 12, 1, inf) == Catch::Approx(5.0 / 3.0).margin(1e-10));
}

TEST_CASE("truncated_f_inv_moment: Monte Carlo oracle, normal j = 1", "[mc]") {
  const int q = 3, s = 2, m = 12;
  const double d = 1.1, d2 = 2.0;
  const double cut = q * d / (q + s);
  const SeriesWeights w = k_weights(kNormal, 0, d2);
  const double series = truncated_f_inv_moment(w, q, s, m, 1, d);
  const auto mc = oracles::mc_f_functional(
      kNormal, q + s, m, d2, 0,
      [cut](double x) { return x < cut ? 1.0 / x : 0.0; }, 1000000, 23);
  CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
}

TEST_CASE("truncated_f_inv_moment: Monte Carlo oracle, Student-t j = 2, h = 1", "[mc]") {
  const int q = 4, s = 2, m = 24;
  const double d = 0.9, d2 = 1.5;
  const double cut = q * d / (q + s);
  const SeriesWeights w = k_weights(kStudent5, 1, d2);
  const double series = truncated_f_inv_moment(w, q, s, m, 2, d);
  const auto mc = oracles::mc_f_functional(
      kStudent5, q + s, m, d2, 1,
      [cut](double x) { return x < cut ? 1.0 / (x * x) : 0.0; }, 1000000, 29);
  CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
}

TEST_CASE("truncated_f_inv_moment: pole guard") {
  const SeriesWeights w = k_weights(kNormal, 0, 1.0);
  CHECK_THROWS_AS(truncated_f_inv_moment(w, 2, 2, 10, 2, 0.5), numerical_error);
}

TEST_CASE("truncated_quadratic_expectation: linear expansions") {
  const SeriesWeights w = k_weights(kStudent5, 1, 3.0);
  const int q = 4, s = 2, m = 24;
  const double d = 0.8, c = q * d / (q + s);
  const double j0 = truncated_f_inv_moment(w, q, s, m, 0, d);
  const double j1 = truncated_f_inv_moment(w, q, s, m, 1, d);
  const double j2 = truncated_f_inv_moment(w, q, s, m, 2, d);
  CHECK(truncated_quadratic_expectation(w, q, s, m, 0.0, 2, d) ==
        Catch::Approx(j0).margin(1e-14));
  CHECK(truncated_quadratic_expectation(w, q, s, m, c, 1, d) ==
        Catch::Approx(j0 - c * j1).margin(1e-14));
  CHECK(truncated_quadratic_expectation(w, q, s, m, c, 2, d) ==
        Catch::Approx(j0 - 2.0 * c * j1 + c * c * j2).margin(1e-14));
}

TEST_CASE("truncated_quadratic_expectation: Monte Carlo oracle", "[mc]") {
  const int q = 4, s = 2, m = 24;
  const double d = 0.9, d2 = 2.0;
  const double c = q * d / (q + s);
  for (int h : {0, 1}) {
    const auto& spec = h == 0 ? kNormal : kStudent5;
    const SeriesWeights w = k_weights(spec, h, d2);
    const double series = truncated_quadratic_expectation(w, q, s, m, c, 2, d);
    const auto mc = oracles::mc_f_functional(
        spec, q + s, m, d2, h,
        [c](double x) {
          if (x >= c) return 0.0;
          const double u = 1.0 - c / x;
          return u * u;
        },
        1000000, 31 + h);
    CAPTURE(h);
    CHECK(std::fabs(series - mc.mean) <= 3.0 * mc.se);
  }
}

TEST_CASE("series consumers refuse an unconverged weight sequence") {
  SeriesWeights w = k_weights(kNormal, 0, 5.0);
  w.tail_bound = 1e-3;  // simulate an insufficient truncation
  CHECK_THROWS_AS(gen_f_cdf(GenFParams{4, 20, w}, 1.0), numerical_error);
  CHECK_THROWS_AS(g_series(w, 4, 1, 20, 0.5), numerical_error);
  CHECK_THROWS_AS(inv_chisq_moment(w, 4, 2, 2), numerical_error);
}

TEST_CASE("signed mixing: series matches the direct mixture integral") {
  // W = 2.2 * Uniform(0.8, 1.3) - 1.2 * Uniform(0.9, 1.1) integrates to one
  // and is negative on (0.9, 1.1).
  auto W = [](double t) {
    double v = 0.0;
    if (t >= 0.8 && t <= 1.3) v += 2.2 / 0.5;
    if (t >= 0.9 && t <= 1.1) v -= 1.2 / 0.2;
    return v;
  };
  const auto spec = EllipticalSpec::make_custom(W, /*is_signed=*/true, 1.0);
  const double psi_expected =
      2.2 * std::log(1.3 / 0.8) / 0.5 - 1.2 * std::log(1.1 / 0.9) / 0.2;
  CHECK(spec.psi_factor() == Catch::Approx(psi_expected).margin(1e-7));

  const int q = 4, m = 20;
  const double d2 = 1.5;
  const SeriesWeights w = k_weights(spec, 0, d2, 1e-9);
  KahanSum mass;
  for (double t : w.terms) mass.add(t);
  CHECK(mass.value() == Catch::Approx(1.0).margin(1e-6));

  // Direct route: integrate the conditional noncentral F cdf against W(t),
  // piecewise over the jump points of the weight.
  const double a = spec.psi_factor();
  auto cdf_oracle = [&](double x) {
    double total = 0.0;
    const double edges[4] = {0.8, 0.9, 1.1, 1.3};
    for (int seg = 0; seg < 3; ++seg)
      total += integrate_adaptive(
          [&](double t) {
            return W(t) * oracles::noncentral_f_cdf(x, q, m, t * a * d2);
          },
          edges[seg], edges[seg + 1], 1e-9);
    return total;
  };
  const GenFParams params{q, m, w};
  for (const double x : {0.5, 1.2, 2.5}) {
    CAPTURE(x);
    CHECK(gen_f_cdf(params, x) == Catch::Approx(cdf_oracle(x)).margin(1e-6));
  }

  // Sampling from a signed weight is rejected.
  ellreg::Rng rng(3);
  CHECK_THROWS_AS(spec.sample_t(rng), unsupported_error);
}

TEST_CASE("custom quadrature route agrees with closed forms end to end") {
  const EllipticalSpec custom = student_as_custom(5.0);
  const double d2 = 1.5;
  const GenFParams closed = make_gen_f_params(kStudent5, 4, 24, d2, 1e-10);
  const GenFParams quad = make_gen_f_params(custom, 4, 24, d2, 1e-10);
  for (const double x : {0.4, 1.0, 2.2})
    CHECK(gen_f_cdf(quad, x) == Catch::Approx(gen_f_cdf(closed, x)).margin(1e-7));
}
