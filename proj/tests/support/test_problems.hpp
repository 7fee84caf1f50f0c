#pragma once

// Shared synthetic designs for the test and acceptance suites.

#include <Eigen/Dense>
#include <random>

#include "ellreg/rng.hpp"

namespace test_problems {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Intercept column plus standard normal regressors; deterministic per seed.
inline MatrixXd make_design(int n, int p, std::uint64_t seed) {
  ellreg::Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd X(n, p);
  X.col(0).setOnes();
  for (int j = 1; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = gauss(rng);
  return X;
}

// Restriction on the leading q coefficients: H = [I_q 0], h = 0.
inline MatrixXd leading_restriction(int q, int p) {
  MatrixXd H = MatrixXd::Zero(q, p);
  H.topLeftCorner(q, q).setIdentity();
  return H;
}

struct Geometry {
  MatrixXd X, V, H;
  VectorXd h;
  int n, p, q;
};

// The desk-scale configuration used throughout: n=30, p=6, q=4, V = I.
inline Geometry standard_geometry(std::uint64_t design_seed = 7u) {
  Geometry g;
  g.n = 30;
  g.p = 6;
  g.q = 4;
  g.X = make_design(g.n, g.p, design_seed);
  g.V = MatrixXd::Identity(g.n, g.n);
  g.H = leading_restriction(g.q, g.p);
  g.h = VectorXd::Zero(g.q);
  return g;
}

}  // namespace test_problems
