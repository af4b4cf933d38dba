#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "solenoid/common.hpp"

namespace solenoid {

// Probability measure on level-n b-adic cells of R^D (D = 1 or 2) with exact
// integer weights. Cells are kept sorted lexicographically, zero weights dropped.
template <int D>
class GridMeasure {
  static_assert(D == 1 || D == 2, "GridMeasure supports dim 1 or 2");

 public:
  using Cell = std::array<std::int64_t, D>;
  struct Entry {
    Cell cell;
    std::uint64_t weight;
  };

  GridMeasure(int base, int level, std::int64_t radius, std::vector<Entry> entries, std::uint64_t ambiguous = 0)
      : base_(base), level_(level), radius_(radius), entries_(std::move(entries)), ambiguous_(ambiguous) {
    if (base_ < 2) throw Error("b must be ≥ 2");
    if (level_ < 0) throw Error("negative level");
    if (radius_ < 1) throw Error("origin box radius must be ≥ 1");
    normalize(entries_);
    finish();
  }

  // Entries already sorted, merged and free of zero weights.
  struct Trusted {};
  GridMeasure(Trusted, int base, int level, std::int64_t radius, std::vector<Entry> entries, std::uint64_t ambiguous = 0)
      : base_(base), level_(level), radius_(radius), entries_(std::move(entries)), ambiguous_(ambiguous) {
    finish();
  }

  static GridMeasure point_mass(int base, int level, Cell cell, std::uint64_t weight = 1, std::int64_t radius = 0) {
    if (radius == 0) radius = required_radius(base, level, cell);
    return GridMeasure(base, level, radius, {Entry{cell, weight}});
  }

  int base() const { return base_; }
  int level() const { return level_; }
  static constexpr int dim() { return D; }
  std::int64_t radius() const { return radius_; }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  // Weight of points flagged within 1e-13 of a cell boundary when the measure was built.
  std::uint64_t ambiguous_weight() const { return ambiguous_; }

  std::uint64_t weight(const Cell& c) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), c, [](const Entry& e, const Cell& k) { return e.cell < k; });
    return (it != entries_.end() && it->cell == c) ? it->weight : 0;
  }
  double mass(const Cell& c) const { return static_cast<double>(weight(c)) / static_cast<double>(total_); }

  std::uint64_t max_weight() const {
    std::uint64_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.weight);
    return m;
  }

  GridMeasure coarsen(int n) const {
    if (n > level_) throw Error("entropy below resolution");
    if (n == level_) return *this;
    const std::int64_t f = ipow(base_, level_ - n);
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
      Cell c;
      for (int d = 0; d < D; ++d) c[d] = floor_div(e.cell[d], f);
      out.push_back(Entry{c, e.weight});
    }
    // The first coordinate stays sorted, so in 1D the sequence is already ordered.
    if constexpr (D == 1) {
      merge_sorted(out);
    } else {
      normalize(out);
    }
    return GridMeasure(Trusted{}, base_, n, radius_, std::move(out), ambiguous_);
  }

  // Weights multiplied by k; the normalized measure is unchanged.
  GridMeasure scaled(std::uint64_t k) const {
    std::vector<Entry> out = entries_;
    for (auto& e : out) e.weight = checked_mul(e.weight, k);
    return GridMeasure(Trusted{}, base_, level_, radius_, std::move(out), checked_mul(ambiguous_, k));
  }

  void dump(std::ostream& os) const {
    os << "GRIDMEASURE v1 dim=" << D << " level=" << level_ << " total=" << total_ << "\n";
    for (const auto& e : entries_) {
      for (int d = 0; d < D; ++d) os << e.cell[d] << ' ';
      os << e.weight << "\n";
    }
  }
  std::string dump_string() const {
    std::ostringstream os;
    dump(os);
    return os.str();
  }

  // Lines starting with '#' before the header are skipped. The dump format does
  // not carry b, so it is supplied by the caller.
  static GridMeasure parse(std::istream& is, int base) {
    std::string line;
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') break;
    int dim = 0, level = -1;
    unsigned long long total = 0;
    if (std::sscanf(line.c_str(), "GRIDMEASURE v1 dim=%d level=%d total=%llu", &dim, &level, &total) != 3)
      throw Error("bad measure header: " + line);
    if (dim != D) throw Error("measure dimension mismatch");
    std::vector<Entry> entries;
    std::int64_t radius = 1;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      Entry e{};
      for (int d = 0; d < D; ++d)
        if (!(ls >> e.cell[d])) throw Error("bad measure line: " + line);
      if (!(ls >> e.weight)) throw Error("bad measure line: " + line);
      radius = std::max(radius, required_radius(base, level, e.cell));
      entries.push_back(e);
    }
    GridMeasure m(base, level, radius, std::move(entries));
    if (m.total() != total) throw Error("measure total does not match its cells");
    return m;
  }
  static GridMeasure parse(const std::string& text, int base) {
    std::istringstream is(text);
    return parse(is, base);
  }

  static std::int64_t required_radius(int base, int level, const Cell& c) {
    const std::int64_t s = ipow(base, level);
    std::int64_t r = 1;
    for (int d = 0; d < D; ++d) {
      std::int64_t lo = -c[d];     // need -R s <= k
      std::int64_t hi = c[d] + 1;  // need k + 1 <= R s
      r = std::max({r, (lo + s - 1) / s, (hi + s - 1) / s});
    }
    return r;
  }

  static void normalize(std::vector<Entry>& v) {
    std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.cell < b.cell; });
    merge_sorted(v);
  }

  static void merge_sorted(std::vector<Entry>& v) {
    std::size_t out = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].weight == 0) continue;
      if (out > 0 && v[out - 1].cell == v[i].cell) {
        v[out - 1].weight = checked_add(v[out - 1].weight, v[i].weight);
      } else {
        v[out++] = v[i];
      }
    }
    v.resize(out);
  }

  friend bool operator==(const GridMeasure& a, const GridMeasure& b) {
    if (a.level_ != b.level_ || a.total_ != b.total_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i)
      if (a.entries_[i].cell != b.entries_[i].cell || a.entries_[i].weight != b.entries_[i].weight) return false;
    return true;
  }

 private:
  void finish() {
    total_ = 0;
    for (const auto& e : entries_) total_ = checked_add(total_, e.weight);
    if (total_ == 0) throw Error("measure has zero total mass");
    const std::int64_t s = ipow(base_, level_);
    if (radius_ > std::numeric_limits<std::int64_t>::max() / s) throw Error("origin box too large for level");
    const std::int64_t lim = radius_ * s;
    for (const auto& e : entries_)
      for (int d = 0; d < D; ++d)
        if (e.cell[d] < -lim || e.cell[d] + 1 > lim) throw Error("cell outside origin box");
  }

  int base_;
  int level_;
  std::int64_t radius_;
  std::vector<Entry> entries_;
  std::uint64_t ambiguous_ = 0;
  std::uint64_t total_ = 0;
};

using Measure1 = GridMeasure<1>;
using Measure2 = GridMeasure<2>;

// t mu + (1-t) nu with t = num/den, realized by scaling weights to a common total.
template <int D>
GridMeasure<D> mix(const GridMeasure<D>& mu, const GridMeasure<D>& nu, std::uint64_t num, std::uint64_t den) {
  if (mu.level() != nu.level() || mu.base() != nu.base()) throw Error("level mismatch");
  if (num > den || den == 0) throw Error("mixing weight must lie in [0,1]");
  std::vector<typename GridMeasure<D>::Entry> out;
  out.reserve(mu.size() + nu.size());
  const std::uint64_t a = checked_mul(num, nu.total());
  const std::uint64_t c = checked_mul(den - num, mu.total());
  for (const auto& e : mu.entries()) out.push_back({e.cell, checked_mul(e.weight, a)});
  for (const auto& e : nu.entries()) out.push_back({e.cell, checked_mul(e.weight, c)});
  return GridMeasure<D>(mu.base(), mu.level(), std::max(mu.radius(), nu.radius()), std::move(out));
}

// Lower-left corner of a cell in real coordinates.
template <int D>
std::array<double, D> cell_corner(const typename GridMeasure<D>::Cell& c, int base, int level) {
  const double s = std::pow(static_cast<double>(base), -level);
  std::array<double, D> r;
  for (int d = 0; d < D; ++d) r[d] = static_cast<double>(c[d]) * s;
  return r;
}

template <int D>
std::array<double, D> cell_center(const typename GridMeasure<D>::Cell& c, int base, int level) {
  const double s = std::pow(static_cast<double>(base), -level);
  std::array<double, D> r;
  for (int d = 0; d < D; ++d) r[d] = (static_cast<double>(c[d]) + 0.5) * s;
  return r;
}

// Index of the half-open level cell containing v; sets `ambiguous` when v lies
// within 1e-13 of a cell boundary.
inline std::int64_t bin_coordinate(double v, double scale, bool& ambiguous) {
  const double t = v * scale;
  const double f = std::floor(t);
  const double lo = (t - f) / scale;
  const double hi = (f + 1.0 - t) / scale;
  if (lo < 1e-13 || hi < 1e-13) ambiguous = true;
  return static_cast<std::int64_t>(f);
}

}  // namespace solenoid
