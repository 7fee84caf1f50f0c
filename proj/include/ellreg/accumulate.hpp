#pragma once

namespace ellreg {

/// Kahan compensated accumulator; series terms and Monte Carlo losses are
/// summed through this so merge order, not floating-point luck, decides the
/// result.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace ellreg
