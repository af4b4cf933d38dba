#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "solenoid/conservation.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/parallel.hpp"
#include "solenoid/projection.hpp"

namespace solenoid {

inline double frac(double v) {
  double f = v - std::floor(v);
  return f >= 1.0 ? 0.0 : f;
}

// theta0 - k delta mod 1 with k delta split exactly into p + e.
inline double rotate_back(double theta0, double delta, std::uint64_t k) {
  const double kd = static_cast<double>(k);
  const double p = kd * delta;
  const double e = std::fma(kd, delta, -p);
  return frac(frac(theta0 - frac(p)) - e);
}

struct RotationOrbit {
  double delta = 0.0;
  double theta0 = 0.0;
  std::vector<double> points;
  double discrepancy = 0.0;
};

// Star discrepancy of points in [0,1), exact for the given points.
inline double star_discrepancy(std::vector<double> pts) {
  if (pts.empty()) throw Error("discrepancy of an empty set");
  std::sort(pts.begin(), pts.end());
  const double n = static_cast<double>(pts.size());
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - pts[i]);
    d = std::max(d, pts[i] - static_cast<double>(i) / n);
  }
  return std::min(d, 1.0);
}

inline RotationOrbit rotation_orbit(double delta, double theta0, std::uint64_t n) {
  if (n < 1) throw Error("orbit length must be >= 1");
  RotationOrbit o;
  o.delta = delta;
  o.theta0 = frac(theta0);
  o.points.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) o.points[k] = rotate_back(o.theta0, delta, k);
  o.discrepancy = star_discrepancy(o.points);
  return o;
}

// Delta = p/q entered as a fraction: theta_k = theta0 - (k p mod q)/q, exactly periodic.
inline RotationOrbit rotation_orbit_rational(std::int64_t p, std::int64_t q, double theta0, std::uint64_t n) {
  if (n < 1) throw Error("orbit length must be >= 1");
  if (q <= 0) throw Error("rational delta needs a positive denominator");
  RotationOrbit o;
  p = ((p % q) + q) % q;
  o.delta = static_cast<double>(p) / static_cast<double>(q);
  o.theta0 = frac(theta0);
  o.points.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    auto r = static_cast<std::int64_t>((static_cast<__int128>(k) * p) % q);
    o.points[k] = frac(o.theta0 - static_cast<double>(r) / static_cast<double>(q));
  }
  o.discrepancy = star_discrepancy(o.points);
  return o;
}

inline RotationOrbit rotation_orbit(const SystemParams& sp, double theta0, std::uint64_t n) {
  if (sp.delta_is_rational()) return rotation_orbit_rational(sp.delta_kind().p, sp.delta_kind().q, theta0, n);
  return rotation_orbit(sp.delta(), theta0, n);
}

struct BirkhoffRow {
  std::uint64_t k = 0;
  double partial_average = 0.0;
  double integral = 0.0;
  double gap = 0.0;
};

struct BirkhoffResult {
  int ell = 0, ell_tilde = 0;
  double integral = 0.0;
  double f_min = 0.0, f_max = 0.0;
  std::vector<BirkhoffRow> rows;  // one per k = 1..k_max

  double gap_at(std::uint64_t k) const {
    if (k < 1 || k > rows.size()) throw Error("no partial average at k = " + std::to_string(k));
    return rows[k - 1].gap;
  }

  std::string csv() const {
    std::ostringstream o;
    o << std::setprecision(17) << "k,partial_average,integral,gap\n";
    for (const auto& r : rows) o << r.k << ',' << r.partial_average << ',' << r.integral << ',' << r.gap << '\n';
    return o.str();
  }
};

// Partial averages of f along theta0 - k step, against the midpoint rule on `quad` points.
template <class F>
BirkhoffResult birkhoff_partial_averages(F&& f, double theta0, double step, std::uint64_t k_max, int quad, int threads = 0) {
  if (k_max < 1 || quad < 1) throw Error("Birkhoff average needs k_max >= 1 and a quadrature grid");
  BirkhoffResult r;
  std::vector<double> orbit_vals(k_max), quad_vals(static_cast<std::size_t>(quad));
  parallel_blocks(k_max + static_cast<std::uint64_t>(quad), resolve_threads(threads), [&](std::size_t i) {
    if (i < k_max)
      orbit_vals[i] = f(rotate_back(theta0, step, i));
    else
      quad_vals[i - k_max] = f((static_cast<double>(i - k_max) + 0.5) / quad);
  });
  long double q = 0;
  for (double v : quad_vals) q += v;
  r.integral = static_cast<double>(q / quad);
  r.f_min = *std::min_element(orbit_vals.begin(), orbit_vals.end());
  r.f_max = *std::max_element(orbit_vals.begin(), orbit_vals.end());
  long double s = 0;
  for (std::uint64_t k = 0; k < k_max; ++k) {
    s += orbit_vals[k];
    double avg = static_cast<double>(s / static_cast<long double>(k + 1));
    r.rows.push_back({k + 1, avg, r.integral, std::abs(avg - r.integral)});
  }
  return r;
}

// f_l(theta) = b^-lt sum_{w in Lambda^lt} (1/lt) H(pi_theta m_{w(0)}, L_lt), lt = scale_tilde(l).
class ProjectionEntropyObservable {
 public:
  ProjectionEntropyObservable(const SystemParams& p, int ell, const FiberBuild& opt, std::uint64_t max_words = 1u << 12)
      : ell_(ell), lt_(scale_tilde(p, ell)) {
    if (lt_ < 1) throw Error("observable scale must be >= 1");
    const double nw = std::pow(static_cast<double>(p.b()), lt_);
    if (nw > static_cast<double>(max_words)) throw Error("budget exceeded: b^lt = " + std::to_string(static_cast<std::uint64_t>(nw)) + " fibers");
    const auto n = static_cast<std::uint64_t>(nw);
    fibers_.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      FiberBuild o = opt;
      o.seed = mix_seed(opt.seed, j);
      o.threads = 1;
      fibers_.push_back(build_fiber(p, word_address(0.0, Word::from_index(j, lt_, p.b()), p.b()), lt_, o));
    }
  }

  int ell() const { return ell_; }
  int ell_tilde() const { return lt_; }

  double operator()(double theta) const {
    long double s = 0;
    for (const auto& mu : fibers_) s += entropy(project_measure(mu, theta), lt_) / lt_;
    return static_cast<double>(s / static_cast<long double>(fibers_.size()));
  }

 private:
  int ell_, lt_;
  std::vector<Measure2> fibers_;
};

// Orbit theta0 - k l Delta of the l-th power of the angle rotation.
inline BirkhoffResult birkhoff_average(const SystemParams& p, int ell, double theta0, std::uint64_t k_max, int quad, const FiberBuild& opt,
                                       std::uint64_t max_words = 1u << 12) {
  ProjectionEntropyObservable f(p, ell, opt, max_words);
  double step;
  if (p.delta_is_rational()) {
    const auto& k = p.delta_kind();
    step = static_cast<double>((static_cast<__int128>(ell) * k.p) % k.q) / static_cast<double>(k.q);
  } else {
    step = frac(static_cast<double>(ell) * p.delta());
  }
  auto r = birkhoff_partial_averages(f, theta0, step, k_max, quad, opt.threads);
  r.ell = ell;
  r.ell_tilde = f.ell_tilde();
  return r;
}

}  // namespace solenoid
