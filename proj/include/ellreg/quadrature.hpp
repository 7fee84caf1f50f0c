#pragma once

// Adaptive Gauss-Kronrod (7-15) quadrature. Semi-infinite integrals over
// (0, inf) are mapped to (0, 1) through t = u / (1 - u) and integrated with
// adaptive panel subdivision to an absolute tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ellreg/errors.hpp"

namespace ellreg {
namespace detail {

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) and weights,
// with the embedded 7-point Gauss weights on the shared nodes.
inline constexpr std::array<double, 8> kGk15Nodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kGk15Weights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGauss7Weights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
  double lo, hi, value, error;
};

template <typename F>
Panel gk15(const F& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double kronrod = kGk15Weights[7] * f(c);
  double gauss = kGauss7Weights[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    const double sum = f(c - dx) + f(c + dx);
    kronrod += kGk15Weights[i] * sum;
    if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, std::fabs(kronrod - gauss)};
}

}  // namespace detail

/// Integrate f over [lo, hi] to absolute tolerance abs_tol, splitting the
/// panel with the largest error estimate until the total is within budget.
/// min_panels sets the initial uniform partition; a single seed panel can
/// report zero error on an integrand whose support slips between the
/// quadrature nodes.
template <typename F>
double integrate_adaptive(const F& f, double lo, double hi, double abs_tol,
                          int max_panels = 2000, int min_panels = 1) {
  std::vector<detail::Panel> panels;
  min_panels = std::max(1, std::min(min_panels, max_panels));
  for (int i = 0; i < min_panels; ++i) {
    const double a = lo + (hi - lo) * i / min_panels;
    const double b = lo + (hi - lo) * (i + 1) / min_panels;
    panels.push_back(detail::gk15(f, a, b));
  }
  while (true) {
    double total_err = 0.0, total_val = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total_err += panels[i].error;
      total_val += panels[i].value;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    if (total_err <= abs_tol) return total_val;
    if (static_cast<int>(panels.size()) >= max_panels)
      throw numerical_error("integrate_adaptive: panel budget exhausted before reaching tolerance");
    const detail::Panel split = panels[worst];
    const double mid = 0.5 * (split.lo + split.hi);
    if (!(mid > split.lo && mid < split.hi))
      throw numerical_error("integrate_adaptive: interval collapsed before reaching tolerance");
    panels[worst] = detail::gk15(f, split.lo, mid);
    panels.push_back(detail::gk15(f, mid, split.hi));
  }
}

/// Integrate f over (0, inf) via the substitution t = u / (1 - u).
template <typename F>
double integrate_zero_to_inf(const F& f, double abs_tol, int max_panels = 2000,
                             int min_panels = 64) {
  auto g = [&f](double u) {
    const double om = 1.0 - u;
    const double t = u / om;
    if (!(t > 0.0) || !std::isfinite(t)) return 0.0;
    const double v = f(t) / (om * om);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate_adaptive(g, 0.0, 1.0, abs_tol, max_panels, min_panels);
}

}  // namespace ellreg
