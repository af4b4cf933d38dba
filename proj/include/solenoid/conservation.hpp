#pragma once

#include <algorithm>
#include <vector>

#include "solenoid/entropy.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/projection.hpp"

namespace solenoid {

// How fiber measures are produced inside sweeps and estimators.
struct FiberBuild {
  WordMode mode = WordMode::exhaustive;
  int depth = 0;  // 0 picks the smallest certified depth
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  int threads = 0;
};

inline Measure2 build_fiber(const SystemParams& p, double x, int level, const FiberBuild& opt) {
  FiberMeasureSpec spec{p, x, opt.depth > 0 ? opt.depth : min_certified_depth(p, level), opt.mode, opt.count, opt.seed, level};
  return build_fiber_measure(spec, opt.threads);
}

struct ProjectionSweep {
  std::vector<double> xs, thetas;
  int level = 0;
  std::vector<std::vector<double>> values;  // values[i][j] = (1/n) H(pi_theta_j m_{x_i}, L_n)
  double min = 0.0, max = 0.0, median = 0.0;
  double beta_estimate = 0.0;  // grid infimum
};

inline ProjectionSweep projection_entropy_sweep(const SystemParams& p, const std::vector<double>& xs, const std::vector<double>& thetas, int n,
                                                const FiberBuild& opt) {
  if (n < 1) throw Error("sweep level must be >= 1");
  ProjectionSweep s;
  s.xs = xs;
  s.thetas = thetas;
  s.level = n;
  std::vector<double> all;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FiberBuild o = opt;
    o.seed = mix_seed(opt.seed, i);
    const Measure2 mu = build_fiber(p, xs[i], n, o);
    std::vector<double> row(thetas.size());
    parallel_blocks(thetas.size(), resolve_threads(opt.threads),
                    [&](std::size_t j) { row[j] = entropy_at_level(project_measure(mu, thetas[j])) / n; });
    all.insert(all.end(), row.begin(), row.end());
    s.values.push_back(std::move(row));
  }
  if (all.empty()) throw Error("empty sweep grid");
  std::sort(all.begin(), all.end());
  s.min = all.front();
  s.max = all.back();
  s.median = all.size() % 2 ? all[all.size() / 2] : 0.5 * (all[all.size() / 2 - 1] + all[all.size() / 2]);
  s.beta_estimate = s.min;
  return s;
}

struct ConservationEstimate {
  double x = 0.0, theta = 0.0;
  int n = 0, q = 0;
  double alpha_hat = 0.0;       // entropy slope on the resolved trailing window
  double alpha_at_level = 0.0;  // (1/n) H(mu, L_n)
  int alpha_lo = 0, alpha_hi = 0;
  double beta_hat = 0.0;
  double upsilon_hat = 0.0;
  double residual = 0.0;
  std::size_t strips = 0;
  bool corollary_consistent = true;
};

inline ConservationEstimate conservation_estimate(const Measure2& mu, double theta, int n, int q) {
  if (q >= n || q < 0) throw Error("strip exponent q must satisfy 0 <= q < n");
  if (n > mu.level()) throw Error("entropy below resolution");
  const Measure2 at_n = mu.coarsen(n);
  ConservationEstimate c;
  c.theta = theta;
  c.n = n;
  c.q = q;
  const auto prof = entropy_profile(mu, 0, n);
  c.alpha_hat = std::max(0.0, prof.slope);
  c.alpha_lo = prof.window_lo;
  c.alpha_hi = prof.window_hi;
  c.alpha_at_level = entropy_at_level(at_n) / n;
  c.beta_hat = entropy_at_level(project_measure(at_n, theta)) / n;
  const double t = static_cast<double>(at_n.total());
  double ups = 0.0;
  auto strips = strip_decomposition(at_n, theta, q);
  for (const auto& [idx, cond] : strips) ups += (static_cast<double>(cond.total()) / t) * entropy(cond, n - q) / (n - q);
  c.strips = strips.size();
  c.upsilon_hat = ups;
  c.residual = c.alpha_hat - c.beta_hat - c.upsilon_hat;
  c.corollary_consistent = !(c.alpha_hat >= c.beta_hat + 1.0 + 0.1 && c.alpha_hat < 2.0 - 0.1);
  return c;
}

inline ConservationEstimate conservation_estimate(const SystemParams& p, double x, double theta, int n, int q, const FiberBuild& opt) {
  auto c = conservation_estimate(build_fiber(p, x, n, opt), theta, n, q);
  c.x = x;
  return c;
}

}  // namespace solenoid
