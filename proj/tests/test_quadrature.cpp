#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ellreg/quadrature.hpp"

using namespace ellreg;

TEST_CASE("adaptive GK15: polynomials are exact") {
  CHECK(integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
        Catch::Approx(1.0 / 3.0).margin(1e-13));
  CHECK(integrate_adaptive([](double x) { return 3.0 * x * x - 2.0 * x + 1.0; }, -1.0, 2.0,
                           1e-12) == Catch::Approx(9.0 - 3.0 + 3.0).margin(1e-12));
}

TEST_CASE("adaptive GK15: endpoint singularity") {
  CHECK(integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-9) ==
        Catch::Approx(2.0).margin(1e-7));
}

TEST_CASE("semi-infinite map: exponential moments") {
  CHECK(integrate_zero_to_inf([](double t) { return std::exp(-t); }, 1e-11) ==
        Catch::Approx(1.0).margin(1e-9));
  CHECK(integrate_zero_to_inf([](double t) { return t * t * t * std::exp(-t); }, 1e-11) ==
        Catch::Approx(6.0).margin(1e-8));
  CHECK(integrate_zero_to_inf([](double t) { return std::exp(-0.5 * t * t); }, 1e-11) ==
        Catch::Approx(std::sqrt(0.5 * std::numbers::pi)).margin(1e-9));
}

TEST_CASE("panel budget exhaustion raises") {
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::sin(1.0 / (x + 1e-6)); }, 0.0,
                                     1.0, 1e-14, 4),
                  numerical_error);
}
