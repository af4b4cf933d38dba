#pragma once

#include <map>
#include <numeric>
#include <vector>

#include "solenoid/grid_measure.hpp"
#include "solenoid/parallel.hpp"
#include "solenoid/rng.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

enum class WordMode { exhaustive, sampled };

struct FiberMeasureSpec {
  SystemParams params;
  double x = 0.0;
  int depth = 0;
  WordMode mode = WordMode::exhaustive;
  std::uint64_t count = 0;  // sampled mode only
  std::uint64_t seed = 0;   // sampled mode only
  int resolution = 0;
};

inline constexpr std::uint64_t kMaxExhaustiveWords = 1ULL << 24;

inline bool depth_certifies(const SystemParams& p, int depth, int level) {
  return symbolic_sum_tail_bound(p, depth) <= std::pow(static_cast<double>(p.b()), -level);
}

inline int min_certified_depth(const SystemParams& p, int level) {
  int d = 0;
  while (!depth_certifies(p, d, level)) {
    if (++d > 4096) throw Error("no certifying depth");
  }
  return d;
}

namespace detail {

struct WalkState {
  double a;
  cplx s;
  cplx g;
};

class Walker {
 public:
  explicit Walker(const SystemParams& p) : p_(p), b_(p.b()), gamma_(p.gamma()) {}
  WalkState start(double x) const { return {x, 0.0, 1.0}; }
  WalkState step(const WalkState& st, int d) const {
    double a = (st.a + d) / b_;
    return {a, st.s + st.g * p_.phi()(a), st.g * gamma_};
  }
  WalkState walk(WalkState st, const Word& w) const {
    for (std::size_t i = 0; i < w.size(); ++i) st = step(st, w[i]);
    return st;
  }

 private:
  const SystemParams& p_;
  double b_;
  cplx gamma_;
};

using Entry2 = Measure2::Entry;

struct Binner {
  double scale;
  std::vector<Measure2::Cell> keys;
  std::uint64_t ambiguous = 0;
  void add(cplx v) {
    bool amb = false;
    Measure2::Cell c{bin_coordinate(v.real(), scale, amb), bin_coordinate(v.imag(), scale, amb)};
    if (amb) ++ambiguous;
    keys.push_back(c);
  }
  std::vector<Entry2> table() {
    std::sort(keys.begin(), keys.end());
    std::vector<Entry2> out;
    for (std::size_t i = 0; i < keys.size();) {
      std::size_t j = i;
      while (j < keys.size() && keys[j] == keys[i]) ++j;
      out.push_back({keys[i], static_cast<std::uint64_t>(j - i)});
      i = j;
    }
    std::vector<Measure2::Cell>().swap(keys);
    return out;
  }
};

template <class Leaf>
void dfs(const Walker& w, const WalkState& st, int remaining, int b, Leaf& leaf) {
  if (remaining == 0) {
    leaf(st);
    return;
  }
  for (int d = 0; d < b; ++d) dfs(w, w.step(st, d), remaining - 1, b, leaf);
}

inline int block_depth(int b, int depth) {
  int k = 0;
  std::uint64_t n = 1;
  while (k < depth && n < 256) {
    n *= static_cast<std::uint64_t>(b);
    ++k;
  }
  return k;
}

inline Measure2 merge_tables(std::vector<std::vector<Entry2>>& tables, int b, int level, std::int64_t radius, std::uint64_t ambiguous) {
  std::size_t n = 0;
  for (auto& t : tables) n += t.size();
  std::vector<Entry2> all;
  all.reserve(n);
  for (auto& t : tables) {
    all.insert(all.end(), t.begin(), t.end());
    std::vector<Entry2>().swap(t);
  }
  Measure2::normalize(all);
  return Measure2(Measure2::Trusted{}, b, level, radius, std::move(all), ambiguous);
}

}  // namespace detail

// Pushforward of the uniform measure on Lambda^depth (or of `count` stratified
// samples) under the truncated sum S(x, .), binned at `level`. No certification.
inline Measure2 pushforward_measure(const SystemParams& p, double x, int depth, int level, WordMode mode, std::uint64_t count,
                                    std::uint64_t seed, int threads = 0) {
  const int b = p.b();
  if (depth < 0) throw Error("negative depth");
  const double scale = std::pow(static_cast<double>(b), level);
  const detail::Walker walker(p);
  std::int64_t radius = p.box_radius();

  if (mode == WordMode::exhaustive) {
    long double words = std::pow(static_cast<long double>(b), depth);
    if (words > static_cast<long double>(kMaxExhaustiveWords)) throw Error("exhaustive enumeration exceeds 2^24 words; use sampled mode");
    const int kb = detail::block_depth(b, depth);
    const std::size_t nblocks = static_cast<std::size_t>(ipow(b, kb));
    std::vector<std::vector<detail::Entry2>> tables(nblocks);
    std::vector<std::uint64_t> amb(nblocks, 0);
    parallel_blocks(nblocks, resolve_threads(threads), [&](std::size_t blk) {
      detail::Binner binner{scale, {}, 0};
      binner.keys.reserve(static_cast<std::size_t>(ipow(b, depth - kb)));
      auto st = walker.walk(walker.start(x), Word::from_index(blk, kb, b));
      auto leaf = [&](const detail::WalkState& s) { binner.add(s.s); };
      detail::dfs(walker, st, depth - kb, b, leaf);
      amb[blk] = binner.ambiguous;
      tables[blk] = binner.table();
    });
    return detail::merge_tables(tables, b, level, radius, std::accumulate(amb.begin(), amb.end(), std::uint64_t{0}));
  }

  if (count == 0) throw Error("sampled mode needs a positive count");
  // Stratify over the first P symbols, P = floor(log_b count) capped at depth.
  int P = 0;
  std::uint64_t prefixes = 1;
  while (P < depth && prefixes <= count / static_cast<std::uint64_t>(b)) {
    prefixes *= static_cast<std::uint64_t>(b);
    ++P;
  }
  const std::uint64_t base_share = count / prefixes;
  const std::uint64_t extra = count % prefixes;
  const int kb = detail::block_depth(b, P);
  const std::size_t nblocks = static_cast<std::size_t>(ipow(b, kb));
  const std::uint64_t per_block = prefixes / nblocks;
  std::vector<std::vector<detail::Entry2>> tables(nblocks);
  std::vector<std::uint64_t> amb(nblocks, 0);
  parallel_blocks(nblocks, resolve_threads(threads), [&](std::size_t blk) {
    detail::Binner binner{scale, {}, 0};
    std::uint64_t pidx = blk * per_block;
    auto st = walker.walk(walker.start(x), Word::from_index(blk, kb, b));
    auto leaf = [&](const detail::WalkState& s) {
      const std::uint64_t n = base_share + (pidx < extra ? 1 : 0);
      SplitMix64 rng(mix_seed(seed, pidx));
      for (std::uint64_t k = 0; k < n; ++k) {
        detail::WalkState t = s;
        for (int i = P; i < depth; ++i) t = walker.step(t, static_cast<int>(rng.below(static_cast<std::uint64_t>(b))));
        binner.add(t.s);
      }
      ++pidx;
    };
    detail::dfs(walker, st, P - kb, b, leaf);
    amb[blk] = binner.ambiguous;
    tables[blk] = binner.table();
  });
  return detail::merge_tables(tables, b, level, radius, std::accumulate(amb.begin(), amb.end(), std::uint64_t{0}));
}

inline Measure2 build_fiber_measure(const FiberMeasureSpec& spec, int threads = 0) {
  if (!depth_certifies(spec.params, spec.depth, spec.resolution)) throw Error("resolution not certified by depth");
  return pushforward_measure(spec.params, spec.x, spec.depth, spec.resolution, spec.mode, spec.count, spec.seed, threads);
}

// Finest level whose cell indices stay exactly representable for this system.
inline int fine_level(const SystemParams& p) {
  int L = 0;
  const double lim = 0x1.0p52 / static_cast<double>(p.box_radius());
  while (std::pow(static_cast<double>(p.b()), L + 1) <= lim) ++L;
  return L;
}

// m_x = b^{-k} sum_j f_{x,j}(m_{j(x)}), f_{x,j}(y) = gamma^k y + S(x,j). Each child
// cell is represented by its lower-left corner and rebinned at `level`.
inline Measure2 refine_fiber_measure(const SystemParams& p, double x, int k, const std::map<Word, Measure2>& children, int level) {
  const int b = p.b();
  if (k < 1) throw Error("refinement needs n_words >= 1");
  const std::uint64_t nwords = static_cast<std::uint64_t>(ipow(b, k));
  std::vector<const Measure2*> kids;
  std::uint64_t common = 1;
  for (std::uint64_t j = 0; j < nwords; ++j) {
    Word w = Word::from_index(j, k, b);
    auto it = children.find(w);
    if (it == children.end()) throw Error("missing child measure for word " + w.str(b));
    if (!kids.empty() && it->second.level() != kids.front()->level()) throw Error("child measures at different levels");
    kids.push_back(&it->second);
    common = std::lcm(common, it->second.total());
  }
  const int child_level = kids.front()->level();
  const double child_step = std::pow(static_cast<double>(b), -child_level);
  const double scale = std::pow(static_cast<double>(b), level);
  const cplx gk = p.gamma_pow(k);
  std::vector<Measure2::Entry> out;
  std::uint64_t ambiguous = 0;
  for (std::uint64_t j = 0; j < nwords; ++j) {
    const Word w = Word::from_index(j, k, b);
    const cplx shift = symbolic_sum(p, x, w);
    const std::uint64_t mult = common / kids[j]->total();
    for (const auto& e : kids[j]->entries()) {
      cplx y(static_cast<double>(e.cell[0]) * child_step, static_cast<double>(e.cell[1]) * child_step);
      cplx z = gk * y + shift;
      bool amb = false;
      Measure2::Cell c{bin_coordinate(z.real(), scale, amb), bin_coordinate(z.imag(), scale, amb)};
      const std::uint64_t wgt = checked_mul(e.weight, mult);
      if (amb) ambiguous = checked_add(ambiguous, wgt);
      out.push_back({c, wgt});
    }
  }
  return Measure2(b, level, p.box_radius(), std::move(out), ambiguous);
}

// Children m_{j(x)} for all j in Lambda^k, each the exhaustive pushforward at depth `child_depth`.
inline std::map<Word, Measure2> build_children(const SystemParams& p, double x, int k, int child_depth, int child_level, int threads = 0) {
  std::map<Word, Measure2> out;
  const std::uint64_t nwords = static_cast<std::uint64_t>(ipow(p.b(), k));
  for (std::uint64_t j = 0; j < nwords; ++j) {
    Word w = Word::from_index(j, k, p.b());
    out.emplace(w, pushforward_measure(p, word_address(x, w, p.b()), child_depth, child_level, WordMode::exhaustive, 0, 0, threads));
  }
  return out;
}

template <int D>
GridMeasure<D> component_measure(const GridMeasure<D>& mu, const typename GridMeasure<D>::Cell& cell, int i) {
  if (i > mu.level() || i < 0) throw Error("component level outside measure resolution");
  const std::int64_t f = ipow(mu.base(), mu.level() - i);
  std::vector<typename GridMeasure<D>::Entry> out;
  for (const auto& e : mu.entries()) {
    bool inside = true;
    for (int d = 0; d < D; ++d) inside = inside && floor_div(e.cell[d], f) == cell[d];
    if (inside) out.push_back(e);
  }
  if (out.empty()) throw Error("empty component");
  return GridMeasure<D>(typename GridMeasure<D>::Trusted{}, mu.base(), mu.level(), mu.radius(), std::move(out));
}

// z -> b^i z - corner; the result lives in [0,1)^D at level n - i.
template <int D>
GridMeasure<D> rescale_component(const GridMeasure<D>& comp, int i) {
  if (i > comp.level() || i < 0) throw Error("component level outside measure resolution");
  const std::int64_t f = ipow(comp.base(), comp.level() - i);
  typename GridMeasure<D>::Cell parent;
  for (int d = 0; d < D; ++d) parent[d] = floor_div(comp.entries().front().cell[d], f);
  std::vector<typename GridMeasure<D>::Entry> out;
  out.reserve(comp.size());
  for (const auto& e : comp.entries()) {
    typename GridMeasure<D>::Entry r = e;
    for (int d = 0; d < D; ++d) {
      if (floor_div(e.cell[d], f) != parent[d]) throw Error("component spans several level-" + std::to_string(i) + " cells");
      r.cell[d] = e.cell[d] - parent[d] * f;
    }
    out.push_back(r);
  }
  return GridMeasure<D>(typename GridMeasure<D>::Trusted{}, comp.base(), comp.level() - i, 1, std::move(out));
}

// Law of the independent sum. Cells combine by index addition (corner addition),
// so a point mass in the cell containing 0 is an exact identity.
template <int D>
GridMeasure<D> convolve(const GridMeasure<D>& mu, const GridMeasure<D>& nu) {
  if (mu.level() != nu.level() || mu.base() != nu.base()) throw Error("level mismatch");
  checked_mul(mu.total(), nu.total());
  using E = typename GridMeasure<D>::Entry;
  std::vector<E> acc;
  std::vector<E> buf;
  constexpr std::size_t kChunk = std::size_t{1} << 23;
  auto flush = [&] {
    GridMeasure<D>::normalize(buf);
    std::vector<E> merged;
    merged.reserve(acc.size() + buf.size());
    std::merge(acc.begin(), acc.end(), buf.begin(), buf.end(), std::back_inserter(merged),
               [](const E& a, const E& b) { return a.cell < b.cell; });
    GridMeasure<D>::merge_sorted(merged);
    acc.swap(merged);
    buf.clear();
  };
  for (const auto& a : mu.entries()) {
    for (const auto& c : nu.entries()) {
      E e;
      for (int d = 0; d < D; ++d) e.cell[d] = a.cell[d] + c.cell[d];
      e.weight = a.weight * c.weight;
      buf.push_back(e);
    }
    if (buf.size() >= kChunk) flush();
  }
  flush();
  return GridMeasure<D>(typename GridMeasure<D>::Trusted{}, mu.base(), mu.level(), mu.radius() + nu.radius(), std::move(acc));
}

}  // namespace solenoid
