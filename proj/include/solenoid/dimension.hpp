#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "solenoid/conservation.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/measure.hpp"

namespace solenoid {

inline double predicted_attractor_dimension(int b, double gamma_abs) {
  return std::min(3.0, 1.0 + std::log(static_cast<double>(b)) / std::log(1.0 / gamma_abs));
}

inline double predicted_fiber_dimension(int b, double gamma_abs) {
  return std::min(2.0, std::log(static_cast<double>(b)) / std::log(1.0 / gamma_abs));
}

struct DimensionVerdict {
  double predicted = 0.0;
  double estimated = 0.0;
  std::string method;  // "box-count" or "entropy-slope"
  double tolerance = 0.0;
  bool one_sided = false;  // rational Delta: only the lower bound applies
  bool pass = false;
};

namespace detail {

// For rational Delta only dim >= min{2, 1 + log b / log(1/|gamma|)} is available.
inline DimensionVerdict make_verdict(const SystemParams& p, double predicted, double lower_bound, double est, const char* method, double tol) {
  DimensionVerdict v;
  v.estimated = est;
  v.method = method;
  v.tolerance = tol;
  v.one_sided = p.delta_is_rational();
  v.predicted = v.one_sided ? lower_bound : predicted;
  v.pass = v.one_sided ? est >= lower_bound - tol : std::abs(est - predicted) <= tol;
  return v;
}

}  // namespace detail

struct FiberDimension {
  DimensionVerdict verdict;
  std::vector<double> xs;
  std::vector<double> alphas;
  std::vector<EntropyProfile> profiles;
};

// alpha_hat = entropy slope of m_x, averaged over the sample of base points.
inline FiberDimension fiber_dimension(const SystemParams& p, const std::vector<double>& xs, int n_lo, int n_hi, const FiberBuild& opt,
                                      double tol = 0.15) {
  if (xs.empty()) throw Error("fiber dimension needs at least one base point");
  FiberDimension out;
  out.xs = xs;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FiberBuild o = opt;
    o.seed = mix_seed(opt.seed, i);
    auto prof = entropy_profile(build_fiber(p, xs[i], n_hi, o), n_lo, n_hi);
    double a = std::max(0.0, prof.slope);
    out.alphas.push_back(a);
    out.profiles.push_back(std::move(prof));
    sum += a;
  }
  const double est = sum / static_cast<double>(xs.size());
  const double lower = std::min(1.0, std::log(static_cast<double>(p.b())) / std::log(1.0 / p.gamma_abs()));
  out.verdict = detail::make_verdict(p, predicted_fiber_dimension(p.b(), p.gamma_abs()), lower, est, "entropy-slope", tol);
  return out;
}

struct AttractorPoint {
  double x;
  cplx y;
};

struct AttractorSpec {
  enum class Mode { words, orbit };
  Mode mode = Mode::words;
  std::uint64_t x_count = 0;      // grid points (words) or trajectories (orbit)
  int depth = 0;                  // word length (words mode)
  std::uint64_t words_per_x = 0;  // 0 = all of Lambda^depth (words); points per trajectory (orbit)
  std::uint64_t burn_in = 200;    // orbit mode
  std::uint64_t seed = 0;
  bool jitter = false;
  std::uint64_t max_points = 60'000'000;
};

struct AttractorCloud {
  std::vector<AttractorPoint> points;
  AttractorSpec spec;
};

namespace detail {

inline std::uint64_t attractor_points_per_x(const SystemParams& p, const AttractorSpec& s) {
  if (s.mode == AttractorSpec::Mode::orbit) return s.words_per_x;
  if (s.words_per_x > 0) return s.words_per_x;
  long double w = std::pow(static_cast<long double>(p.b()), s.depth);
  if (w > static_cast<long double>(kMaxExhaustiveWords)) throw Error("budget exceeded");
  return static_cast<std::uint64_t>(w);
}

inline double grid_x(const AttractorSpec& s, std::uint64_t i) {
  double off = 0.5;
  if (s.jitter) off = SplitMix64(mix_seed(s.seed, 0x5A5A0000ULL + i)).uniform();
  return (static_cast<double>(i) + off) / static_cast<double>(s.x_count);
}

// Points for one grid abscissa (words mode) or one trajectory (orbit mode).
inline void attractor_points_for(const SystemParams& p, const AttractorSpec& s, std::uint64_t i, std::vector<AttractorPoint>& out) {
  const int b = p.b();
  const Walker walker(p);
  if (s.mode == AttractorSpec::Mode::words) {
    const double x = grid_x(s, i);
    if (s.words_per_x == 0) {
      auto leaf = [&](const WalkState& st) { out.push_back({x, st.s}); };
      dfs(walker, walker.start(x), s.depth, b, leaf);
    } else {
      SplitMix64 rng(mix_seed(s.seed, i));
      for (std::uint64_t k = 0; k < s.words_per_x; ++k) {
        WalkState st = walker.start(x);
        for (int d = 0; d < s.depth; ++d) st = walker.step(st, static_cast<int>(rng.below(static_cast<std::uint64_t>(b))));
        out.push_back({x, st.s});
      }
    }
    return;
  }
  // Orbit mode: x = X / b^K with K base-b digits; each step shifts one digit out
  // and a fresh random digit in at resolution b^-K.
  int K = 0;
  std::uint64_t bK = 1;
  while (static_cast<double>(bK) * b <= 0x1.0p52) {
    bK *= static_cast<std::uint64_t>(b);
    ++K;
  }
  const std::uint64_t top = bK / static_cast<std::uint64_t>(b);
  SplitMix64 rng(mix_seed(s.seed, 0x0B17000000ULL + i));
  std::uint64_t X = rng.below(bK);
  cplx y = 0.0;
  const cplx g = p.gamma();
  for (std::uint64_t k = 0; k < s.burn_in + s.words_per_x; ++k) {
    const double x = static_cast<double>(X) / static_cast<double>(bK);
    if (k >= s.burn_in) out.push_back({x, y});
    y = g * y + p.phi()(x);
    X = (X % top) * static_cast<std::uint64_t>(b) + rng.below(static_cast<std::uint64_t>(b));
  }
}

}  // namespace detail

inline AttractorCloud generate_attractor(const SystemParams& p, const AttractorSpec& s, int threads = 0) {
  if (s.x_count == 0) throw Error("attractor needs x_count >= 1");
  const std::uint64_t per = detail::attractor_points_per_x(p, s);
  if (per == 0 || static_cast<long double>(per) * s.x_count > static_cast<long double>(s.max_points)) throw Error("budget exceeded");
  AttractorCloud c;
  c.spec = s;
  std::vector<std::vector<AttractorPoint>> parts(static_cast<std::size_t>(s.x_count));
  parallel_blocks(parts.size(), resolve_threads(threads), [&](std::size_t i) { detail::attractor_points_for(p, s, i, parts[i]); });
  c.points.reserve(static_cast<std::size_t>(per * s.x_count));
  for (auto& v : parts) c.points.insert(c.points.end(), v.begin(), v.end());
  return c;
}

// Occupied-cell counts of the product partition (b-adic in x) x (b-adic in y)
// at several levels. Points must arrive with nondecreasing x; cells in
// different x-columns are disjoint, so each column is deduplicated on its own.
class BoxCounter {
 public:
  BoxCounter(int b, std::vector<int> levels) : b_(b), levels_(std::move(levels)) {
    for (int n : levels_) slots_.push_back(Slot{n, std::pow(static_cast<double>(b_), n), -1, {}, 0, 0});
  }

  void add(double x, cplx y) {
    if (x < last_x_) throw Error("box counter needs points sorted by x");
    last_x_ = x;
    ++points_;
    for (auto& s : slots_) {
      const auto col = static_cast<std::int64_t>(std::floor(x * s.scale));
      if (col != s.column) {
        flush(s);
        s.column = col;
      }
      s.buf.push_back({static_cast<std::int64_t>(std::floor(y.real() * s.scale)), static_cast<std::int64_t>(std::floor(y.imag() * s.scale))});
      if (s.buf.size() >= 2 * s.uniq + (1u << 20)) compact(s);
    }
  }

  std::vector<std::uint64_t> counts() {
    std::vector<std::uint64_t> out;
    for (auto& s : slots_) {
      flush(s);
      out.push_back(s.count);
    }
    return out;
  }
  std::uint64_t points() const { return points_; }
  const std::vector<int>& levels() const { return levels_; }

 private:
  struct Slot {
    int level;
    double scale;
    std::int64_t column;
    std::vector<std::array<std::int64_t, 2>> buf;
    std::size_t uniq;
    std::uint64_t count;
  };
  static void compact(Slot& s) {
    std::sort(s.buf.begin(), s.buf.end());
    s.buf.erase(std::unique(s.buf.begin(), s.buf.end()), s.buf.end());
    s.uniq = s.buf.size();
  }
  static void flush(Slot& s) {
    compact(s);
    s.count += s.buf.size();
    s.buf.clear();
    s.uniq = 0;
  }

  int b_;
  std::vector<int> levels_;
  std::vector<Slot> slots_;
  double last_x_ = -1e300;
  std::uint64_t points_ = 0;
};

inline std::vector<int> level_range(int lo, int hi) {
  std::vector<int> v;
  for (int n = lo; n <= hi; ++n) v.push_back(n);
  return v;
}

inline std::vector<std::uint64_t> box_counts(const AttractorCloud& cloud, int b, const std::vector<int>& levels) {
  std::vector<std::size_t> order(cloud.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return cloud.points[a].x < cloud.points[c].x; });
  BoxCounter bc(b, levels);
  for (auto i : order) bc.add(cloud.points[i].x, cloud.points[i].y);
  return bc.counts();
}

// Streams a words-mode cloud straight into a box counter, x-block by x-block.
inline std::vector<std::uint64_t> attractor_box_counts(const SystemParams& p, const AttractorSpec& s, const std::vector<int>& levels, int threads = 0) {
  if (s.mode != AttractorSpec::Mode::words || s.jitter) throw Error("streaming box counts need an unjittered words-mode grid");
  const std::uint64_t per = detail::attractor_points_per_x(p, s);
  if (static_cast<long double>(per) * s.x_count > static_cast<long double>(s.max_points)) throw Error("budget exceeded");
  BoxCounter bc(p.b(), levels);
  const std::uint64_t chunk = 32;
  for (std::uint64_t lo = 0; lo < s.x_count; lo += chunk) {
    const std::uint64_t hi = std::min(s.x_count, lo + chunk);
    std::vector<std::vector<AttractorPoint>> parts(static_cast<std::size_t>(hi - lo));
    parallel_blocks(parts.size(), resolve_threads(threads), [&](std::size_t i) { detail::attractor_points_for(p, s, lo + i, parts[i]); });
    for (auto& v : parts)
      for (auto& pt : v) bc.add(pt.x, pt.y);
  }
  return bc.counts();
}

struct BoxDimension {
  DimensionVerdict verdict;
  std::vector<int> levels;
  std::vector<std::uint64_t> counts;
  int fit_lo = 0, fit_hi = 0;
};

// Least-squares slope of log_b N(n); the two coarsest and two finest levels are
// left out of the fit when the range allows it.
inline BoxDimension box_dimension_from_counts(const SystemParams& p, const std::vector<int>& levels, const std::vector<std::uint64_t>& counts,
                                              std::uint64_t points, double tol = 0.2) {
  if (levels.size() != counts.size() || levels.size() < 2) throw Error("box dimension needs at least two levels");
  if (static_cast<double>(counts.back()) >= 0.5 * static_cast<double>(points)) throw Error("saturation");
  BoxDimension out;
  out.levels = levels;
  out.counts = counts;
  std::size_t lo = 0, hi = levels.size() - 1;
  if (levels.size() >= 6) {
    lo += 2;
    hi -= 2;
  }
  out.fit_lo = levels[lo];
  out.fit_hi = levels[hi];
  std::vector<double> xs, ys;
  for (std::size_t i = lo; i <= hi; ++i) {
    xs.push_back(levels[i]);
    ys.push_back(log_base(static_cast<double>(counts[i]), p.b()));
  }
  const double est = least_squares_slope(xs, ys);
  const double lower = std::min(2.0, 1.0 + std::log(static_cast<double>(p.b())) / std::log(1.0 / p.gamma_abs()));
  out.verdict = detail::make_verdict(p, predicted_attractor_dimension(p.b(), p.gamma_abs()), lower, est, "box-count", tol);
  return out;
}

inline BoxDimension box_dimension(const SystemParams& p, const AttractorCloud& cloud, int n_lo, int n_hi, double tol = 0.2) {
  auto levels = level_range(n_lo, n_hi);
  return box_dimension_from_counts(p, levels, box_counts(cloud, p.b(), levels), cloud.points.size(), tol);
}

struct LyCrosscheck {
  double boxdim = 0.0;
  double alpha_hat = 0.0;
  double residual = 0.0;
  BoxDimension box;
  FiberDimension fiber;
};

inline LyCrosscheck ly_crosscheck(const SystemParams& p, const std::vector<double>& x_sample, int n, const FiberBuild& fiber_opt,
                                  const AttractorSpec& cloud_spec, int box_lo, int box_hi) {
  LyCrosscheck r;
  r.fiber = fiber_dimension(p, x_sample, 0, n, fiber_opt);
  auto levels = level_range(box_lo, box_hi);
  auto counts = attractor_box_counts(p, cloud_spec, levels, fiber_opt.threads);
  r.box = box_dimension_from_counts(p, levels, counts, detail::attractor_points_per_x(p, cloud_spec) * cloud_spec.x_count);
  r.boxdim = r.box.verdict.estimated;
  r.alpha_hat = r.fiber.verdict.estimated;
  r.residual = std::abs(r.boxdim - 1.0 - r.alpha_hat);
  return r;
}

}  // namespace solenoid
