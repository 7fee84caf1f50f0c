#pragma once

// Simulation harness: empirical risks and biases of the five estimators,
// the empirical distribution of the test statistic, and grid sweeps that put
// the analytic risk formulas next to their Monte Carlo counterparts.
//
// Determinism contract: replication i draws from its own generator seeded by
// derive_seed(seed, i), and replications are grouped into fixed-size shards
// merged in shard order, so results are bit-identical for any thread count.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "ellreg/accumulate.hpp"
#include "ellreg/distributions.hpp"
#include "ellreg/estimators.hpp"
#include "ellreg/model.hpp"
#include "ellreg/risk.hpp"
#include "ellreg/rng.hpp"

namespace ellreg {

inline constexpr std::array<const char*, 5> kEstimatorNames = {"gls", "restricted", "pt",
                                                               "stein", "positive_rule"};

struct MCConfig {
  long replications = 10000;
  std::uint64_t seed = 20240901;
  MatrixXd X, V, H;
  VectorXd h;
  VectorXd beta_true;
  EllipticalSpec spec = EllipticalSpec::make_normal(1.0);
  double alpha = 0.05;
  MatrixXd W;  // loss weight; empty selects W = C
  std::vector<double> delta_star2_grid;
  int threads = 0;  // 0: ELLREG_THREADS env var, else hardware concurrency
  long shard_size = 4096;
  bool collect_statistic = false;  // keep the per-replication L_n sample
  double series_tol = kSeriesTol;
};

struct EstimatorStats {
  double risk = 0.0;
  double risk_se = 0.0;
  VectorXd bias;
  VectorXd bias_se;
};

struct MCResult {
  std::array<EstimatorStats, 5> est;  // gls, restricted, pt, stein, positive_rule
  long replications = 0;
  long stein_degenerate = 0;
  bool shrinkage_supported = false;
  std::vector<double> L_samples;  // in replication order when requested
  std::string warning;
};

namespace detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ELLREG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct ShardAccumulator {
  explicit ShardAccumulator(int p) {
    for (auto& v : bias_sum) v = VectorXd::Zero(p);
    for (auto& v : bias_sq) v = VectorXd::Zero(p);
  }
  std::array<KahanSum, 5> loss, loss_sq;
  std::array<VectorXd, 5> bias_sum, bias_sq;
  long degenerate = 0;
};

}  // namespace detail

/// Empirical risk and bias of all five estimators under the configured error
/// law. Losses are (b - beta)' W (b - beta); standard errors come from the
/// per-replication loss sample. Stein-degenerate replications (L_n = 0) are
/// counted and carry the positive-rule value, matching the estimator policy.
inline MCResult empirical_risk(const MCConfig& config) {
  const FitContext ctx(config.X, config.V, config.H, config.h, config.alpha);
  const int p = ctx.p();
  const MatrixXd W = config.W.size() == 0 ? ctx.C() : config.W;
  if (config.beta_true.size() != p)
    throw validation_error("empirical_risk: beta_true must have length p");
  const long N = config.replications;
  if (N < 1) throw validation_error("empirical_risk: replications must be >= 1");

  MCResult result;
  result.replications = N;
  result.shrinkage_supported = ctx.shrinkage_supported();
  if (N < 1000)
    result.warning = "replications below 1000: risk comparisons will be noisy";
  if (config.collect_statistic) result.L_samples.resize(N);

  const long shard_size = std::max<long>(1, config.shard_size);
  const long n_shards = (N + shard_size - 1) / shard_size;
  std::vector<detail::ShardAccumulator> shards(n_shards, detail::ShardAccumulator(p));

  std::atomic<long> next_shard{0};
  auto worker = [&]() {
    VectorXd eps(ctx.n()), y(ctx.n()), diff(p);
    for (;;) {
      const long s = next_shard.fetch_add(1);
      if (s >= n_shards) break;
      auto& acc = shards[s];
      const long lo = s * shard_size;
      const long hi = std::min(N, lo + shard_size);
      for (long i = lo; i < hi; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
        sample_errors_with(config.spec, ctx.chol_V(), rng, eps);
        y.noalias() = config.X * config.beta_true + eps;
        const EstimateBundle b = ctx.fit(y);
        if (b.stein_degenerate) ++acc.degenerate;
        if (config.collect_statistic) result.L_samples[i] = b.L_n;
        const VectorXd* betas[5] = {&b.beta_gls, &b.beta_restricted, &b.beta_pt,
                                    b.beta_s ? &*b.beta_s : nullptr,
                                    b.beta_prs ? &*b.beta_prs : nullptr};
        for (int e = 0; e < 5; ++e) {
          if (!betas[e]) continue;
          diff = *betas[e] - config.beta_true;
          const double loss = diff.dot(W * diff);
          acc.loss[e].add(loss);
          acc.loss_sq[e].add(loss * loss);
          acc.bias_sum[e] += diff;
          acc.bias_sq[e] += diff.cwiseProduct(diff);
        }
      }
    }
  };

  const int n_threads = std::min<long>(detail::resolve_threads(config.threads), n_shards);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const int active = result.shrinkage_supported ? 5 : 3;
  for (int e = 0; e < active; ++e) {
    KahanSum loss, loss_sq;
    VectorXd bias_sum = VectorXd::Zero(p), bias_sq = VectorXd::Zero(p);
    for (const auto& acc : shards) {
      loss.add(acc.loss[e].value());
      loss_sq.add(acc.loss_sq[e].value());
      bias_sum += acc.bias_sum[e];
      bias_sq += acc.bias_sq[e];
    }
    auto& st = result.est[e];
    const double mean = loss.value() / N;
    st.risk = mean;
    const double var = std::max(0.0, loss_sq.value() / N - mean * mean);
    st.risk_se = std::sqrt(var / N);
    st.bias = bias_sum / N;
    st.bias_se = ((bias_sq / N - st.bias.cwiseProduct(st.bias)).cwiseMax(0.0) / N).cwiseSqrt();
  }
  for (const auto& acc : shards) result.stein_degenerate += acc.degenerate;
  return result;
}

struct StatisticDistribution {
  std::vector<double> samples;  // replication order
  double delta_star2 = 0.0;
  double ks_distance = 0.0;  // against the generalized non-central F series cdf
};

/// Kolmogorov-Smirnov distance between a sample and a cdf.
template <typename Cdf>
double ks_distance(std::vector<double> sample, const Cdf& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    ks = std::max(ks, std::max(F - i / n, (i + 1) / n - F));
  }
  return ks;
}

/// Sample the test statistic and report the KS distance against the series
/// cdf at the configuration's noncentrality.
inline StatisticDistribution statistic_distribution(const MCConfig& config) {
  MCConfig cfg = config;
  cfg.collect_statistic = true;
  const MCResult mc = empirical_risk(cfg);

  StatisticDistribution out;
  out.samples = mc.L_samples;
  const FitContext ctx(config.X, config.V, config.H, config.h, config.alpha);
  const VectorXd gap = config.H * config.beta_true - config.h;
  const double theta = gap.dot(ctx.V1() * gap);
  out.delta_star2 = theta / config.spec.sigma2_eps();
  const GenFParams params =
      make_gen_f_params(config.spec, ctx.q(), ctx.m(), out.delta_star2, config.series_tol);
  out.ks_distance =
      ks_distance(out.samples, [&](double x) { return gen_f_cdf(params, x); });
  return out;
}

/// Direction along which sweeps move beta away from the restriction: the
/// leading right-singular vector of H, so the map from the target
/// noncentrality to beta is a deterministic ray from the minimum-norm
/// solution of H beta = h.
inline VectorXd sweep_direction(const MatrixXd& H) {
  Eigen::JacobiSVD<MatrixXd> svd(H, Eigen::ComputeFullV);
  return svd.matrixV().col(0);
}

/// beta hitting a target noncentrality Delta*^2 = theta / sigma2_eps.
inline VectorXd beta_for_delta(const MatrixXd& H, const VectorXd& h, const MatrixXd& V1,
                               double delta_star2, double sigma2_eps) {
  const VectorXd beta0 =
      H.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(h);
  const VectorXd u = sweep_direction(H);
  const VectorXd Hu = H * u;
  const double denom = Hu.dot(V1 * Hu);
  if (!(denom > 0.0))
    throw numerical_error("beta_for_delta: sweep direction is degenerate under V1");
  const double s = std::sqrt(delta_star2 * sigma2_eps / denom);
  return beta0 + s * u;
}

struct SweepRow {
  double delta_star2 = 0.0;
  std::array<double, 5> analytic{};   // NaN where shrinkage unsupported
  std::array<double, 5> empirical{};
  std::array<double, 5> se{};
  bool stein_le_gls = false;          // analytic uniform-dominance check
  bool prs_le_stein = false;          // analytic
  bool restricted_le_gls = false;     // analytic at this grid point
  bool pt_le_gls = false;             // analytic at this grid point
  bool within_3se = true;             // every estimator matches MC within 3 SE
  int h0_category = 0;                // populated on the Delta*^2 = 0 row
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double sigma2_eps = 0.0;
  long replications = 0;
};

/// One row per grid point: analytic risks, empirical risks with standard
/// errors, and the per-point ordering checks.
inline SweepTable sweep(const MCConfig& config) {
  const FitContext ctx(config.X, config.V, config.H, config.h, config.alpha);
  const MatrixXd W = config.W.size() == 0 ? ctx.C() : config.W;
  std::vector<double> grid = config.delta_star2_grid;
  if (grid.empty()) grid = default_delta_grid();

  SweepTable table;
  table.sigma2_eps = config.spec.sigma2_eps();
  table.replications = config.replications;
  table.rows.reserve(grid.size());

  for (const double d2 : grid) {
    const VectorXd beta =
        beta_for_delta(config.H, config.h, ctx.V1(), d2, config.spec.sigma2_eps());
    RiskConfig rc = make_risk_config(config.X, config.V, config.H, config.h, beta, config.spec,
                                     config.alpha, W);
    rc.series_tol = config.series_tol;
    const RiskReport rep = risk_all(rc);

    MCConfig mc = config;
    mc.beta_true = beta;
    mc.W = W;
    const MCResult emp = empirical_risk(mc);

    SweepRow row;
    row.delta_star2 = rep.delta_star2;
    row.analytic = {rep.risk_gls, rep.risk_restricted, rep.risk_pt, rep.risk_s, rep.risk_prs};
    for (int e = 0; e < 5; ++e) {
      if (e >= 3 && !rep.shrinkage_supported) {
        row.empirical[e] = std::numeric_limits<double>::quiet_NaN();
        row.se[e] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      row.empirical[e] = emp.est[e].risk;
      row.se[e] = emp.est[e].risk_se;
    }
    row.restricted_le_gls = rep.risk_restricted <= rep.risk_gls + 1e-12;
    row.pt_le_gls = rep.risk_pt <= rep.risk_gls + 1e-12;
    if (rep.shrinkage_supported) {
      row.stein_le_gls = rep.risk_s <= rep.risk_gls + 1e-9;
      row.prs_le_stein = rep.risk_prs <= rep.risk_s + 1e-9;
    }
    const int active = rep.shrinkage_supported ? 5 : 3;
    for (int e = 0; e < active; ++e)
      if (std::fabs(row.analytic[e] - row.empirical[e]) > 3.0 * row.se[e]) row.within_3se = false;
    if (d2 == 0.0) row.h0_category = rep.thresholds.h0_category;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace ellreg
