#include <gtest/gtest.h>

#include <random>

#include "solenoid/rotation.hpp"

using namespace solenoid;

TEST(RotationOrbit, HalfTurn) {
  auto o = rotation_orbit(0.5, 0.0, 4);
  EXPECT_EQ(o.points, (std::vector<double>{0.0, 0.5, 0.0, 0.5}));
  // standard star discrepancy of {0,0,1/2,1/2}
  EXPECT_DOUBLE_EQ(o.discrepancy, 0.5);
  auto r = rotation_orbit_rational(1, 2, 0.0, 4);
  EXPECT_EQ(r.points, o.points);
}

TEST(RotationOrbit, ZeroDelta) {
  auto o = rotation_orbit(0.0, 0.0, 1000);
  for (double v : o.points) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(o.discrepancy, 1.0, 1e-12);
  auto o2 = rotation_orbit(0.0, 0.3, 1000);
  EXPECT_DOUBLE_EQ(o2.discrepancy, 0.7);
}

TEST(RotationOrbit, GoldenRatio) {
  auto o = rotation_orbit((std::sqrt(5.0) - 1) / 2, 0.0, 100000);
  RecordProperty("discrepancy", std::to_string(o.discrepancy));
  EXPECT_LT(o.discrepancy, 5e-4);
  EXPECT_GE(o.discrepancy, 0.0);
  EXPECT_LE(o.discrepancy, 1.0);
}

TEST(RotationOrbit, ArithmeticExactOverMillionSteps) {
  const double delta = std::sqrt(2.0) - 1;
  const double th = 0.123;
  for (std::uint64_t k : {1ULL, 1000ULL, 123457ULL, 999999ULL, 1000000ULL}) {
    long double ref = static_cast<long double>(th) - static_cast<long double>(k) * static_cast<long double>(delta);
    ref -= std::floor(ref);
    double v = rotate_back(th, delta, k);
    double d = std::abs(static_cast<double>(ref) - v);
    EXPECT_LT(std::min(d, 1.0 - d), 1e-12);
  }
}

TEST(RotationOrbit, RationalExactlyPeriodic) {
  for (std::int64_t q : {2, 3, 7, 10}) {
    auto o = rotation_orbit_rational(1, q, 0.25, 5 * static_cast<std::uint64_t>(q));
    for (std::size_t k = 0; k + q < o.points.size(); ++k) EXPECT_EQ(o.points[k], o.points[k + q]);
    auto z = rotation_orbit_rational(1, q, 0.0, 6 * static_cast<std::uint64_t>(q));
    EXPECT_NEAR(z.discrepancy, 1.0 / q, 1e-15);
  }
  auto p = SystemParams::with_rational_delta(2, 0.5, 1, 2, TrigPoly::cosine());
  auto o = rotation_orbit(p, 0.0, 6);
  EXPECT_EQ(o.points[0], o.points[2]);
  EXPECT_EQ(o.points[1], o.points[5]);
}

TEST(Birkhoff, ConstantObservable) {
  auto r = birkhoff_partial_averages([](double) { return 1.0; }, 0.2, 0.41, 300, 50);
  for (auto& row : r.rows) EXPECT_EQ(row.partial_average, 1.0);
  EXPECT_EQ(r.integral, 1.0);
}

TEST(Birkhoff, AveragesStayInRange) {
  auto f = [](double t) { return std::sin(kTwoPi * t) + 0.5 * std::cos(6 * kTwoPi * t); };
  auto r = birkhoff_partial_averages(f, 0.0, std::sqrt(3.0) - 1, 2000, 400, 3);
  for (auto& row : r.rows) {
    EXPECT_GE(row.partial_average, r.f_min - 1e-15);
    EXPECT_LE(row.partial_average, r.f_max + 1e-15);
  }
  EXPECT_LT(r.gap_at(2000), r.gap_at(10));
}

TEST(Birkhoff, ZeroPhi) {
  SystemParams p(2, 0.5, std::sqrt(2.0) - 1, TrigPoly::constant(0.0));
  auto r = birkhoff_average(p, 4, 0.0, 64, 32, {});
  EXPECT_EQ(r.integral, 0.0);
  for (auto& row : r.rows) EXPECT_EQ(row.partial_average, 0.0);
  EXPECT_EQ(r.csv().substr(0, 30), "k,partial_average,integral,gap");
}

TEST(Birkhoff, BudgetExceeded) {
  SystemParams p(3, 0.5, std::sqrt(2.0) - 1, TrigPoly::cosine());
  EXPECT_THROW(birkhoff_average(p, 20, 0.0, 4, 4, {}, 4096), Error);
}

TEST(Birkhoff, ReferenceSystemConverges) {
  SystemParams p(2, 0.5, std::sqrt(2.0) - 1, TrigPoly::cosine());
  auto r = birkhoff_average(p, 6, 0.0, 256, 256, {});
  EXPECT_EQ(r.ell_tilde, 6);
  RecordProperty("gap16", std::to_string(r.gap_at(16)));
  RecordProperty("gap256", std::to_string(r.gap_at(256)));
  EXPECT_LT(r.gap_at(256), r.gap_at(16));
}
