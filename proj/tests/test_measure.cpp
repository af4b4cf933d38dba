#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/measure.hpp"

using namespace solenoid;

namespace {

const double kIrr = std::sqrt(2.0) - 1.0;

Measure2 uniform_square(int b, int n) {
  std::vector<Measure2::Entry> e;
  const std::int64_t s = ipow(b, n);
  for (std::int64_t i = 0; i < s; ++i)
    for (std::int64_t j = 0; j < s; ++j) e.push_back({{i, j}, 1});
  return Measure2(b, n, 1, e);
}

Measure2 random_measure(std::mt19937_64& rng, int b, int n, int cells, int spread) {
  std::vector<Measure2::Entry> e;
  std::uniform_int_distribution<std::int64_t> k(-spread, spread - 1);
  for (int i = 0; i < cells; ++i) e.push_back({{k(rng), k(rng)}, 1 + rng() % 50});
  return Measure2(b, n, (spread + ipow(b, n) - 1) / ipow(b, n) + 1, e);
}

}  // namespace

TEST(BuildFiber, ZeroPhiIsPointMassAtOrigin) {
  SystemParams p(3, 0.6, kIrr, TrigPoly::constant(0.0));
  auto mu = build_fiber_measure({p, 0.37, 10, WordMode::exhaustive, 0, 0, 6});
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_EQ(mu.entries()[0].cell, (Measure2::Cell{0, 0}));
  EXPECT_EQ(mu.total(), static_cast<std::uint64_t>(ipow(3, 10)));
}

TEST(BuildFiber, ConstantPhiIsPointMassNearTwo) {
  SystemParams p(2, 0.5, 0.0, TrigPoly::constant(1.0));
  auto mu = build_fiber_measure({p, 0.2, 12, WordMode::exhaustive, 0, 0, 6});
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_LE(std::abs(mu.entries()[0].cell[0] - 128), 1);
  EXPECT_EQ(mu.entries()[0].cell[1], 0);
}

TEST(BuildFiber, MatchesDirectFormulaEnumeration) {
  SystemParams p(2, 0.5, kIrr, TrigPoly::cosine());
  const int N = 20, n = 8;
  auto mu = build_fiber_measure({p, 0.0, N, WordMode::exhaustive, 0, 0, n});
  EXPECT_EQ(mu.total(), 1u << N);
  std::map<std::pair<long long, long long>, unsigned long long> ref;
  const double s = std::pow(2.0, n);
  for (std::uint64_t i = 0; i < (1u << N); ++i) {
    cplx v = oracle::direct_sum(p, 0.0, Word::from_index(i, N, 2));
    ref[{static_cast<long long>(std::floor(v.real() * s)), static_cast<long long>(std::floor(v.imag() * s))}]++;
  }
  ASSERT_EQ(ref.size(), mu.size());
  std::size_t k = 0;
  double h = 0;
  for (auto& [c, w] : ref) {
    EXPECT_EQ(mu.entries()[k].cell[0], c.first);
    EXPECT_EQ(mu.entries()[k].cell[1], c.second);
    EXPECT_EQ(mu.entries()[k].weight, w);
    h += fb(static_cast<double>(w) / (1u << N), 2);
    ++k;
  }
  EXPECT_NEAR(entropy(mu, n), h, 1e-12);
  EXPECT_EQ(mu.ambiguous_weight(), 0u);
}

TEST(BuildFiber, Errors) {
  SystemParams p(2, 0.5, kIrr, TrigPoly::cosine());
  EXPECT_THROW(build_fiber_measure({p, 0.0, 8, WordMode::exhaustive, 0, 0, 8}), Error);
  EXPECT_THROW(build_fiber_measure({p, 0.0, 25, WordMode::exhaustive, 0, 0, 8}), Error);
  EXPECT_THROW(build_fiber_measure({p, 0.0, 30, WordMode::sampled, 0, 1, 8}), Error);
}

TEST(BuildFiber, SupportInsideBox) {
  SystemParams p(3, 0.7, kIrr, TrigPoly(0.2, {1.0, 0.3}, {0.5}));
  auto mu = build_fiber_measure({p, 0.4, 12, WordMode::exhaustive, 0, 0, 1});
  EXPECT_EQ(mu.radius(), static_cast<std::int64_t>(std::ceil(p.attractor_radius())) + 1);
}

TEST(BuildFiber, DeterministicAcrossThreads) {
  SystemParams p(3, 0.55, kIrr, TrigPoly::cosine());
  auto a = build_fiber_measure({p, 0.3, 14, WordMode::exhaustive, 0, 0, 6}, 1);
  auto b = build_fiber_measure({p, 0.3, 14, WordMode::exhaustive, 0, 0, 6}, 4);
  EXPECT_EQ(a.dump_string(), b.dump_string());
  auto c = build_fiber_measure({p, 0.3, 24, WordMode::sampled, 100000, 42, 6}, 1);
  auto d = build_fiber_measure({p, 0.3, 24, WordMode::sampled, 100000, 42, 6}, 3);
  EXPECT_EQ(c.total(), 100000u);
  EXPECT_EQ(c.dump_string(), d.dump_string());
  auto e = build_fiber_measure({p, 0.3, 24, WordMode::sampled, 100000, 43, 6}, 1);
  EXPECT_NE(c.dump_string(), e.dump_string());
}

TEST(Refine, ZeroPhi) {
  SystemParams p(2, 0.5, kIrr, TrigPoly::constant(0.0));
  auto kids = build_children(p, 0.3, 1, 6, 10);
  auto mu = refine_fiber_measure(p, 0.3, 1, kids, 6);
  ASSERT_EQ(mu.size(), 1u);
  EXPECT_EQ(mu.entries()[0].cell, (Measure2::Cell{0, 0}));
}

TEST(Refine, MissingChild) {
  SystemParams p(2, 0.5, kIrr, TrigPoly::cosine());
  auto kids = build_children(p, 0.3, 2, 6, 10);
  kids.erase(Word{1, 0});
  EXPECT_THROW(refine_fiber_measure(p, 0.3, 2, kids, 4), Error);
}

TEST(Refine, MatchesDirectBuildCosine) {
  SystemParams p(2, 0.4, kIrr, TrigPoly::cosine());
  const int n = 6, N = min_certified_depth(p, n) + 2;
  auto direct = build_fiber_measure({p, 0.21, N, WordMode::exhaustive, 0, 0, n});
  auto kids = build_children(p, 0.21, 2, N - 2, fine_level(p));
  EXPECT_EQ(refine_fiber_measure(p, 0.21, 2, kids, n), direct);
}

TEST(Refine, IdentityOnRandomSystems) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int done = 0;
  while (done < 20) {
    int b = 2 + static_cast<int>(rng() % 2);
    SystemParams p(b, std::uniform_real_distribution<double>(0.25, 0.6)(rng), std::uniform_real_distribution<double>(0, 1)(rng),
                   TrigPoly(u(rng), {u(rng), 0.5 * u(rng)}, {0.5 * u(rng)}));
    const int n = 4;
    const int N = min_certified_depth(p, n);
    if (std::pow(b, N) > (1 << 18)) continue;
    const int k = 1 + done % 3;
    double x = std::uniform_real_distribution<double>(0, 1)(rng);
    auto direct = build_fiber_measure({p, x, N, WordMode::exhaustive, 0, 0, n});
    auto refined = refine_fiber_measure(p, x, k, build_children(p, x, k, N - k, fine_level(p)), n);
    EXPECT_EQ(refined, direct) << "system " << done;
    ++done;
  }
}

TEST(GridMeasureFormat, RoundTrip) {
  std::mt19937_64 rng(29);
  auto mu = random_measure(rng, 3, 4, 300, 200);
  std::string text = mu.dump_string();
  EXPECT_EQ(text.rfind("GRIDMEASURE v1 dim=2 level=4 total=", 0), 0u);
  auto back = Measure2::parse("# comment\n" + text, 3);
  EXPECT_EQ(back.dump_string(), text);
  Measure1 one(2, 3, 1, {{{5}, 2}, {{-3}, 7}});
  EXPECT_EQ(Measure1::parse(one.dump_string(), 2).dump_string(), "GRIDMEASURE v1 dim=1 level=3 total=9\n-3 7\n5 2\n");
  EXPECT_THROW(Measure2::parse("GRIDMEASURE v1 dim=2 level=1 total=5\n0 0 4\n", 2), Error);
}

TEST(GridMeasureInvariants, BoxAndTotals) {
  EXPECT_THROW(Measure2(2, 2, 1, {{{4, 0}, 1}}), Error);
  EXPECT_THROW(Measure2(2, 2, 1, {{{-5, 0}, 1}}), Error);
  Measure2 ok(2, 2, 1, {{{3, -4}, 1}, {{3, -4}, 2}});
  EXPECT_EQ(ok.total(), 3u);
  EXPECT_EQ(ok.size(), 1u);
}

TEST(Component, Examples) {
  auto pm = Measure2::point_mass(2, 5, {3, 7}, 9);
  auto c = component_measure(pm, {0, 0}, 2);
  EXPECT_EQ(c, pm);
  auto sq = uniform_square(2, 1);
  for (std::int64_t i = 0; i < 2; ++i)
    for (std::int64_t j = 0; j < 2; ++j) {
      auto comp = component_measure(sq, {i, j}, 1);
      EXPECT_EQ(comp.size(), 1u);
      EXPECT_EQ(comp.total(), sq.total() / 4);
    }
  EXPECT_THROW(component_measure(sq, {5, 5}, 1), Error);
}

TEST(Component, WeightsSumToParent) {
  std::mt19937_64 rng(31);
  auto mu = random_measure(rng, 2, 6, 500, 128);
  auto coarse = mu.coarsen(3);
  std::uint64_t sum = 0;
  for (const auto& e : coarse.entries()) {
    auto comp = component_measure(mu, e.cell, 3);
    EXPECT_EQ(comp.total(), e.weight);
    sum += comp.total();
  }
  EXPECT_EQ(sum, mu.total());
}

TEST(Rescale, Examples) {
  auto pm = Measure2::point_mass(2, 5, {8, 16});
  auto r = rescale_component(component_measure(pm, {1, 2}, 2), 2);
  EXPECT_EQ(r.level(), 3);
  EXPECT_EQ(r.entries()[0].cell, (Measure2::Cell{0, 0}));
  Measure2 four(2, 3, 1, {{{2, 4}, 1}, {{3, 4}, 1}, {{2, 5}, 1}, {{3, 5}, 1}});
  auto s = rescale_component(four, 2);
  EXPECT_EQ(s.level(), 1);
  EXPECT_EQ(s, uniform_square(2, 1));
  EXPECT_THROW(rescale_component(uniform_square(2, 2), 1), Error);
}

TEST(Rescale, EntropyRelation) {
  std::mt19937_64 rng(37);
  auto mu = random_measure(rng, 3, 6, 800, 700);
  auto coarse = mu.coarsen(2);
  for (std::size_t t = 0; t < 10 && t < coarse.size(); ++t) {
    auto comp = component_measure(mu, coarse.entries()[t].cell, 2);
    auto res = rescale_component(comp, 2);
    for (int m = 0; m <= 4; ++m) EXPECT_EQ(entropy(res, m), entropy(comp, 2 + m));
  }
}

TEST(Convolve, Identity) {
  std::mt19937_64 rng(41);
  auto mu = random_measure(rng, 2, 5, 200, 64);
  auto delta = Measure2::point_mass(2, 5, {0, 0});
  auto r = convolve(delta, mu);
  EXPECT_EQ(r.dump_string(), mu.dump_string());
}

TEST(Convolve, PointMasses) {
  auto u = Measure2::point_mass(2, 4, {3, -2}, 2);
  auto v = Measure2::point_mass(2, 4, {-7, 5}, 3);
  auto r = convolve(u, v);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.entries()[0].cell, (Measure2::Cell{-4, 3}));
  EXPECT_EQ(r.total(), 6u);
  EXPECT_THROW(convolve(u, Measure2::point_mass(2, 3, {0, 0})), Error);
}

TEST(Convolve, RowTimesColumnIsSquare) {
  const int n = 4;
  std::vector<Measure2::Entry> row, col;
  for (std::int64_t i = 0; i < 16; ++i) {
    row.push_back({{i, 0}, 1});
    col.push_back({{0, i}, 1});
  }
  Measure2 r(2, n, 1, row), c(2, n, 1, col);
  auto sq = convolve(r, c);
  EXPECT_EQ(sq, uniform_square(2, n));
  EXPECT_NEAR(entropy(sq, n), entropy(r, n) + entropy(c, n), 1e-12);
  // double-loop oracle on random inputs
  std::mt19937_64 rng(43);
  auto a = random_measure(rng, 3, 3, 40, 30), b = random_measure(rng, 3, 3, 40, 30);
  std::map<std::pair<long long, long long>, unsigned long long> ref;
  for (auto& x : a.entries())
    for (auto& y : b.entries()) ref[{x.cell[0] + y.cell[0], x.cell[1] + y.cell[1]}] += x.weight * y.weight;
  auto ab = convolve(a, b);
  ASSERT_EQ(ab.size(), ref.size());
  std::size_t k = 0;
  for (auto& [cell, w] : ref) {
    EXPECT_EQ(ab.entries()[k].cell[0], cell.first);
    EXPECT_EQ(ab.entries()[k].weight, w);
    ++k;
  }
  EXPECT_EQ(ab.total(), a.total() * b.total());
}
