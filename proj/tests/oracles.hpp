#pragma once
// Independent reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "solenoid/symbolic.hpp"

namespace oracle {

using solenoid::cplx;

// S(x,w) from the literal address formula x/b^n + w_1/b^n + ... + w_n/b,
// summed forward with explicit powers of gamma.
inline cplx direct_sum(const solenoid::SystemParams& p, double x, const solenoid::Word& w) {
  cplx s = 0.0;
  const double b = p.b();
  for (std::size_t n = 1; n <= w.size(); ++n) {
    double a = x / std::pow(b, n);
    for (std::size_t k = 1; k <= n; ++k) a += w[k - 1] / std::pow(b, n - k + 1);
    s += std::polar(std::pow(p.gamma_abs(), n - 1), solenoid::kTwoPi * p.delta() * (n - 1)) * p.phi()(a);
  }
  return s;
}

inline double literal_address(double x, const solenoid::Word& w, int b) {
  long double num = x;
  long double pw = 1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += w[i] * pw;
    pw *= b;
  }
  return static_cast<double>(num / pw);
}

// Entropy from an ordered map of coarse cells.
template <class M>
double map_entropy(const M& mu, int n) {
  std::map<std::vector<long long>, unsigned long long> cells;
  long long f = 1;
  for (int i = n; i < mu.level(); ++i) f *= mu.base();
  for (const auto& e : mu.entries()) {
    std::vector<long long> key;
    for (auto k : e.cell) key.push_back(static_cast<long long>(std::floor(static_cast<long double>(k) / f)));
    cells[key] += e.weight;
  }
  double h = 0.0;
  for (auto& [k, w] : cells) {
    double p = static_cast<double>(w) / static_cast<double>(mu.total());
    h -= p * std::log(p) / std::log(static_cast<double>(mu.base()));
  }
  return h;
}

}  // namespace oracle
