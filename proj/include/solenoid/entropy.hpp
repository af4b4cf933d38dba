#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "solenoid/grid_measure.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/projection.hpp"

namespace solenoid {

// Atoms per occupied cell required before a level counts as resolved.
inline constexpr double kResolveRatio = 16.0;
inline constexpr int kSlopeWindow = 3;

template <int D>
double entropy_at_level(const GridMeasure<D>& mu) {
  const double t = static_cast<double>(mu.total());
  double h = 0.0;
  for (const auto& e : mu.entries()) h += fb(static_cast<double>(e.weight) / t, mu.base());
  return h;
}

template <int D>
double entropy(const GridMeasure<D>& mu, int n) {
  if (n > mu.level()) throw Error("entropy below resolution");
  if (n < 0) throw Error("negative level");
  if (n == mu.level()) return entropy_at_level(mu);
  return entropy_at_level(mu.coarsen(n));
}

namespace detail {

// Groups the cells of a level-L measure by their level-i parent. Each group is
// returned as (parent, weights of its children).
template <int D>
struct Group {
  typename GridMeasure<D>::Cell parent;
  std::uint64_t mass;
  std::vector<std::uint64_t> weights;
};

template <int D>
std::vector<Group<D>> group_by_parent(const GridMeasure<D>& fine, int i) {
  const std::int64_t f = ipow(fine.base(), fine.level() - i);
  struct Item {
    typename GridMeasure<D>::Cell parent;
    std::size_t idx;
  };
  std::vector<Item> items;
  items.reserve(fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    typename GridMeasure<D>::Cell p;
    for (int d = 0; d < D; ++d) p[d] = floor_div(fine.entries()[k].cell[d], f);
    items.push_back({p, k});
  }
  if constexpr (D != 1)
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.parent < b.parent; });
  std::vector<Group<D>> out;
  for (std::size_t k = 0; k < items.size();) {
    Group<D> g{items[k].parent, 0, {}};
    std::size_t j = k;
    while (j < items.size() && items[j].parent == items[k].parent) {
      std::uint64_t w = fine.entries()[items[j].idx].weight;
      g.weights.push_back(w);
      g.mass += w;
      ++j;
    }
    out.push_back(std::move(g));
    k = j;
  }
  return out;
}

inline double weights_entropy(const std::vector<std::uint64_t>& w, std::uint64_t total, int b) {
  double h = 0.0;
  const double t = static_cast<double>(total);
  for (auto v : w) h += fb(static_cast<double>(v) / t, b);
  return h;
}

}  // namespace detail

// H(mu, L_nf | L_nc) by difference, cross-checked against sum_P mu(P) H(mu_P, L_nf).
template <int D>
double conditional_entropy(const GridMeasure<D>& mu, int nf, int nc) {
  if (nc > nf) throw Error("coarse level exceeds fine level");
  const GridMeasure<D> fine = mu.coarsen(nf);
  const double diff = entropy_at_level(fine) - entropy(fine, nc);
  double sum = 0.0;
  const double t = static_cast<double>(fine.total());
  for (const auto& g : detail::group_by_parent(fine, nc))
    sum += (static_cast<double>(g.mass) / t) * detail::weights_entropy(g.weights, g.mass, mu.base());
  if (std::abs(diff - sum) > 1e-9 * (1.0 + std::abs(diff))) throw Error("conditional entropy formulas disagree");
  return diff;
}

struct EntropyProfile {
  struct Point {
    int level;
    double entropy;
    double normalized;
    std::size_t occupied;
  };
  std::vector<Point> points;
  double slope = 0.0;
  int window = kSlopeWindow;
  int window_lo = 0, window_hi = 0;
  int resolved_level = 0;
};

inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

// Profile over [n_lo, n_hi]. The slope is fitted on a trailing window that ends
// at the finest resolved level (at least kResolveRatio atoms per occupied cell).
template <int D>
EntropyProfile entropy_profile(const GridMeasure<D>& mu, int n_lo, int n_hi, int window = kSlopeWindow, double resolve_ratio = kResolveRatio) {
  if (n_hi > mu.level()) throw Error("entropy below resolution");
  if (n_lo < 0 || n_lo > n_hi) throw Error("bad level range");
  EntropyProfile prof;
  prof.window = window;
  std::vector<EntropyProfile::Point> pts;
  GridMeasure<D> cur = mu.coarsen(n_hi);
  for (int n = n_hi; n >= n_lo; --n) {
    if (n < n_hi) cur = cur.coarsen(n);
    double h = entropy_at_level(cur);
    pts.push_back({n, h, n > 0 ? h / n : 0.0, cur.size()});
  }
  std::reverse(pts.begin(), pts.end());
  prof.points = pts;
  int resolved = n_lo;
  for (const auto& p : pts)
    if (static_cast<double>(mu.total()) / static_cast<double>(p.occupied) >= resolve_ratio) resolved = p.level;
  prof.resolved_level = resolved;
  prof.window_hi = resolved;
  prof.window_lo = std::max(n_lo, resolved - window + 1);
  std::vector<double> xs, ys;
  for (const auto& p : pts)
    if (p.level >= prof.window_lo && p.level <= prof.window_hi) {
      xs.push_back(p.level);
      ys.push_back(p.entropy);
    }
  if (xs.size() >= 2) {
    prof.slope = least_squares_slope(xs, ys);
  } else {
    prof.slope = prof.window_hi > 0 ? ys.back() / prof.window_hi : 0.0;
  }
  return prof;
}

// Profile slope on an explicit window [lo, hi].
template <int D>
double entropy_slope(const GridMeasure<D>& mu, int lo, int hi) {
  std::vector<double> xs, ys;
  GridMeasure<D> cur = mu.coarsen(hi);
  for (int n = hi; n >= lo; --n) {
    if (n < hi) cur = cur.coarsen(n);
    xs.push_back(n);
    ys.push_back(entropy_at_level(cur));
  }
  return least_squares_slope(xs, ys);
}

template <int D>
struct ComponentSample {
  int level;
  typename GridMeasure<D>::Cell cell;
  double entropy;  // (1/m) H(mu^{x,i}, L_m)
  double mass;     // component mass mu(cell)
};

template <int D>
struct ComponentDistribution {
  std::vector<ComponentSample<D>> samples;
  int levels = 0;
  double mean = 0.0;  // mass-weighted, averaged over levels
  // Probability (mass-weighted, averaged over levels) that the entropy is below t.
  double fraction_below(double t) const {
    double f = 0.0;
    for (const auto& s : samples)
      if (s.entropy < t) f += s.mass;
    return levels ? f / levels : 0.0;
  }
};

// For each i in [i_lo, i_hi) and each level-i cell, the rescaled component entropy at scale m.
template <int D>
ComponentDistribution<D> component_entropy_distribution(const GridMeasure<D>& mu, int i_lo, int i_hi, int m) {
  if (m < 1) throw Error("component scale m must be >= 1");
  if (i_lo < 0 || i_lo >= i_hi) throw Error("bad component level range");
  if (i_hi - 1 + m > mu.level()) throw Error("entropy below resolution");
  ComponentDistribution<D> out;
  out.levels = i_hi - i_lo;
  const double t = static_cast<double>(mu.total());
  double acc = 0.0;
  for (int i = i_lo; i < i_hi; ++i) {
    const GridMeasure<D> fine = mu.coarsen(i + m);
    for (const auto& g : detail::group_by_parent(fine, i)) {
      double h = detail::weights_entropy(g.weights, g.mass, mu.base()) / m;
      double mass = static_cast<double>(g.mass) / t;
      out.samples.push_back({i, g.parent, h, mass});
      acc += h * mass;
    }
  }
  out.mean = acc / out.levels;
  return out;
}

struct PorosityReport {
  double h = 0.0, delta = 0.0;
  int m = 0, n1 = 0, n2 = 0;
  double fraction = 0.0;
  double mean_component_entropy = 0.0;
  bool verdict = false;
};

template <int D>
PorosityReport porosity_check(const GridMeasure<D>& mu, double h, double delta, int m, int n1, int n2) {
  if (n2 + m > mu.level()) throw Error("entropy below resolution");
  auto dist = component_entropy_distribution(mu, n1, n2, m);
  PorosityReport r{h, delta, m, n1, n2, 0.0, dist.mean, false};
  r.fraction = std::clamp(dist.fraction_below(h + delta), 0.0, 1.0);
  r.verdict = r.fraction > 1.0 - delta;
  return r;
}

struct SaturationReport {
  enum class Kind { zero, line, full };
  Kind kind = Kind::zero;
  double theta = 0.0;  // direction of V for lines
  double eps = 0.0;
  int m = 0;
  double captured_mass = 0.0;
  bool concentrated = false;
  double defect = 0.0;
  bool saturated = false;
};

struct SaturationScan {
  SaturationReport zero, full;
  SaturationReport line_concentration;  // line with the largest captured mass
  SaturationReport line_saturation;     // line with the largest saturation defect
  std::vector<SaturationReport> lines;
};

namespace detail {

// Best mass in a Euclidean eps-ball centred at an occupied cell centre.
inline double best_ball_mass(const Measure2& mu, double eps) {
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  struct P {
    double x, y;
    std::uint64_t w;
  };
  std::vector<P> pts;
  pts.reserve(mu.size());
  for (const auto& e : mu.entries())
    pts.push_back({(static_cast<double>(e.cell[0]) + 0.5) * step, (static_cast<double>(e.cell[1]) + 0.5) * step, e.weight});
  // entries are sorted by cell[0], hence by x
  std::uint64_t best = 0;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (pts[lo].x < pts[i].x - eps) ++lo;
    std::uint64_t m = 0;
    for (std::size_t j = lo; j < pts.size() && pts[j].x <= pts[i].x + eps; ++j) {
      double dx = pts[j].x - pts[i].x, dy = pts[j].y - pts[i].y;
      if (dx * dx + dy * dy <= eps * eps) m += pts[j].w;
    }
    best = std::max(best, m);
  }
  return static_cast<double>(best) / static_cast<double>(mu.total());
}

// Best mass within eps of a translate of the line perpendicular to direction theta.
inline double best_strip_mass(const Measure2& mu, double theta, double eps) {
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  std::vector<std::pair<double, std::uint64_t>> v;
  v.reserve(mu.size());
  for (const auto& e : mu.entries()) {
    cplx z((static_cast<double>(e.cell[0]) + 0.5) * step, (static_cast<double>(e.cell[1]) + 0.5) * step);
    v.emplace_back(project_point(z, theta), e.weight);
  }
  std::sort(v.begin(), v.end());
  std::uint64_t best = 0, cur = 0;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    cur += v[i].second;
    while (v[i].first - v[lo].first > 2 * eps) cur -= v[lo++].second;
    best = std::max(best, cur);
  }
  return static_cast<double>(best) / static_cast<double>(mu.total());
}

}  // namespace detail

// V ranges over {0, lines at the angles in theta_grid, C}. W = V^perp.
inline SaturationScan saturation_scan(const Measure2& mu, double eps, int m, const std::vector<double>& theta_grid) {
  if (m > mu.level() || m < 1) throw Error("entropy below resolution");
  const Measure2 at_m = mu.coarsen(m);
  const double hm = entropy_at_level(at_m) / m;
  SaturationScan s;
  const double ball = detail::best_ball_mass(at_m, eps);
  s.zero = {SaturationReport::Kind::zero, 0.0, eps, m, ball, ball >= 1.0 - eps, 0.0, true};
  const double dfull = hm - 2.0;
  s.full = {SaturationReport::Kind::full, 0.0, eps, m, ball, ball >= 1.0 - eps, dfull, dfull >= -eps};
  bool first = true;
  for (double th : theta_grid) {
    SaturationReport r;
    r.kind = SaturationReport::Kind::line;
    r.theta = th;
    r.eps = eps;
    r.m = m;
    r.captured_mass = detail::best_strip_mass(at_m, th, eps);
    r.concentrated = r.captured_mass >= 1.0 - eps;
    r.defect = hm - entropy_at_level(project_measure(at_m, th + 0.25)) / m - 1.0;
    r.saturated = r.defect >= -eps;
    if (first || r.captured_mass > s.line_concentration.captured_mass) s.line_concentration = r;
    if (first || r.defect > s.line_saturation.defect) s.line_saturation = r;
    first = false;
    s.lines.push_back(r);
  }
  return s;
}

inline std::vector<double> default_theta_grid(int L = 64) {
  std::vector<double> g;
  for (int k = 0; k < L; ++k) g.push_back(static_cast<double>(k) / L);
  return g;
}

struct GrowthResult {
  double h_fiber = 0.0;        // (1/n) H(fiber, L_n)
  double h_convolution = 0.0;  // (1/n) H(mu * fiber, L_n)
  double gain = 0.0;
  bool mu_has_entropy = false;
};

inline GrowthResult entropy_growth_experiment(const Measure2& mu, const Measure2& fiber, int n) {
  if (n < 1) throw Error("growth experiment needs n >= 1");
  if (mu.base() != fiber.base()) throw Error("level mismatch");
  if (mu.level() < n || fiber.level() < n) throw Error("level mismatch");
  const Measure2 a = mu.coarsen(n), f = fiber.coarsen(n);
  GrowthResult r;
  r.mu_has_entropy = entropy_at_level(a) > 0.0;
  r.h_fiber = entropy_at_level(f) / n;
  r.h_convolution = entropy_at_level(convolve(a, f)) / n;
  r.gain = r.h_convolution - r.h_fiber;
  return r;
}

}  // namespace solenoid
