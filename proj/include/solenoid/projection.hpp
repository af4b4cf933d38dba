#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "solenoid/grid_measure.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

// (cos 2 pi theta, sin 2 pi theta), exact on quarter turns.
inline std::pair<double, double> turn_cos_sin(double theta) {
  double t = theta - std::floor(theta);
  if (t == 0.0) return {1.0, 0.0};
  if (t == 0.25) return {0.0, 1.0};
  if (t == 0.5) return {-1.0, 0.0};
  if (t == 0.75) return {0.0, -1.0};
  return {std::cos(kTwoPi * t), std::sin(kTwoPi * t)};
}

// pi_theta(z) = Re(z e^{-2 pi i theta}).
inline double project_point(cplx z, double theta) {
  auto [c, s] = turn_cos_sin(theta);
  return z.real() * c + z.imag() * s;
}

namespace detail {

inline std::vector<Measure1::Entry> histogram1(std::vector<std::int64_t>& keys, const std::vector<std::uint64_t>& w) {
  std::vector<Measure1::Entry> out;
  if (keys.empty()) return out;
  auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
  const std::int64_t kmin = *lo, span = *hi - *lo + 1;
  if (span <= static_cast<std::int64_t>(4 * keys.size() + 1024)) {
    std::vector<std::uint64_t> dense(static_cast<std::size_t>(span), 0);
    for (std::size_t i = 0; i < keys.size(); ++i) dense[static_cast<std::size_t>(keys[i] - kmin)] += w[i];
    for (std::int64_t k = 0; k < span; ++k)
      if (dense[static_cast<std::size_t>(k)]) out.push_back({{k + kmin}, dense[static_cast<std::size_t>(k)]});
    return out;
  }
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) out.push_back({{keys[i]}, w[i]});
  Measure1::normalize(out);
  return out;
}

}  // namespace detail

// Each 2D cell's weight goes to the 1D cell of pi_theta(cell center) at the same level.
inline Measure1 project_measure(const Measure2& mu, double theta) {
  auto [c, s] = turn_cos_sin(theta);
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  const double scale = std::pow(static_cast<double>(mu.base()), mu.level());
  std::vector<std::int64_t> keys;
  std::vector<std::uint64_t> w;
  keys.reserve(mu.size());
  w.reserve(mu.size());
  for (const auto& e : mu.entries()) {
    double x = (static_cast<double>(e.cell[0]) + 0.5) * step;
    double y = (static_cast<double>(e.cell[1]) + 0.5) * step;
    keys.push_back(static_cast<std::int64_t>(std::floor((x * c + y * s) * scale)));
    w.push_back(e.weight);
  }
  auto out = detail::histogram1(keys, w);
  const auto radius = static_cast<std::int64_t>(std::ceil(static_cast<double>(mu.radius()) * std::sqrt(2.0)));
  return Measure1(Measure1::Trusted{}, mu.base(), mu.level(), radius, std::move(out));
}

// Image of mu under z -> a z + c using cell centers, rebinned at the same level.
inline Measure2 affine_image(const Measure2& mu, cplx a, cplx c, std::int64_t radius) {
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  const double scale = 1.0 / step;
  std::vector<Measure2::Entry> out;
  out.reserve(mu.size());
  for (const auto& e : mu.entries()) {
    cplx z((static_cast<double>(e.cell[0]) + 0.5) * step, (static_cast<double>(e.cell[1]) + 0.5) * step);
    cplx v = a * z + c;
    out.push_back({{static_cast<std::int64_t>(std::floor(v.real() * scale)), static_cast<std::int64_t>(std::floor(v.imag() * scale))}, e.weight});
  }
  return Measure2(mu.base(), mu.level(), radius, std::move(out));
}

inline Measure1 scale_image(const Measure1& mu, double r) {
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  std::vector<Measure1::Entry> out;
  out.reserve(mu.size());
  for (const auto& e : mu.entries()) {
    double v = r * (static_cast<double>(e.cell[0]) + 0.5) * step;
    out.push_back({{static_cast<std::int64_t>(std::floor(v / step))}, e.weight});
  }
  return Measure1(mu.base(), mu.level(), mu.radius(), std::move(out));
}

// Restriction to the strip |pi_theta(z) - c| <= b^-q / 2, coordinatized along theta + 1/4.
inline Measure1 fiber_conditional_measure(const Measure2& mu, double theta, double c, int q) {
  if (q > mu.level()) throw Error("strip narrower than measure resolution");
  const double half = 0.5 * std::pow(static_cast<double>(mu.base()), -q);
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  const double scale = 1.0 / step;
  std::vector<std::int64_t> keys;
  std::vector<std::uint64_t> w;
  for (const auto& e : mu.entries()) {
    cplx z((static_cast<double>(e.cell[0]) + 0.5) * step, (static_cast<double>(e.cell[1]) + 0.5) * step);
    if (std::abs(project_point(z, theta) - c) > half) continue;
    keys.push_back(static_cast<std::int64_t>(std::floor(project_point(z, theta + 0.25) * scale)));
    w.push_back(e.weight);
  }
  if (keys.empty()) throw Error("empty strip");
  auto out = detail::histogram1(keys, w);
  const auto radius = static_cast<std::int64_t>(std::ceil(static_cast<double>(mu.radius()) * std::sqrt(2.0)));
  return Measure1(Measure1::Trusted{}, mu.base(), mu.level(), radius, std::move(out));
}

// Partition into strips centred at s b^-q (s integer), half-open on the upper side.
// Returns (strip index, conditional measure) in increasing strip order.
inline std::vector<std::pair<std::int64_t, Measure1>> strip_decomposition(const Measure2& mu, double theta, int q) {
  if (q > mu.level()) throw Error("strip narrower than measure resolution");
  const double qs = std::pow(static_cast<double>(mu.base()), q);
  const double step = std::pow(static_cast<double>(mu.base()), -mu.level());
  const double scale = 1.0 / step;
  struct Item {
    std::int64_t strip, key;
    std::uint64_t w;
  };
  std::vector<Item> items;
  items.reserve(mu.size());
  for (const auto& e : mu.entries()) {
    cplx z((static_cast<double>(e.cell[0]) + 0.5) * step, (static_cast<double>(e.cell[1]) + 0.5) * step);
    auto s = static_cast<std::int64_t>(std::floor(project_point(z, theta) * qs + 0.5));
    auto k = static_cast<std::int64_t>(std::floor(project_point(z, theta + 0.25) * scale));
    items.push_back({s, k, e.weight});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.strip != b.strip ? a.strip < b.strip : a.key < b.key; });
  const auto radius = static_cast<std::int64_t>(std::ceil(static_cast<double>(mu.radius()) * std::sqrt(2.0)));
  std::vector<std::pair<std::int64_t, Measure1>> out;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::vector<Measure1::Entry> cells;
    while (j < items.size() && items[j].strip == items[i].strip) {
      cells.push_back({{items[j].key}, items[j].w});
      ++j;
    }
    Measure1::merge_sorted(cells);
    out.emplace_back(items[i].strip, Measure1(Measure1::Trusted{}, mu.base(), mu.level(), radius, std::move(cells)));
    i = j;
  }
  return out;
}

}  // namespace solenoid
