#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "solenoid/common.hpp"

namespace solenoid {

using cplx = std::complex<double>;

// phi(x) = a0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x), k = 1..K.
class TrigPoly {
 public:
  TrigPoly() = default;
  TrigPoly(double a0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
      : a0_(a0), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
    std::size_t k = std::max(cos_.size(), sin_.size());
    cos_.resize(k, 0.0);
    sin_.resize(k, 0.0);
    while (!cos_.empty() && cos_.back() == 0.0 && sin_.back() == 0.0) {
      cos_.pop_back();
      sin_.pop_back();
    }
    pure_cos1_ = cos_.size() == 1 && sin_[0] == 0.0;
  }

  static TrigPoly constant(double c) { return TrigPoly(c, {}, {}); }
  static TrigPoly cosine() { return TrigPoly(0.0, {1.0}, {}); }
  static TrigPoly sine() { return TrigPoly(0.0, {}, {1.0}); }

  double a0() const { return a0_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  int degree() const { return static_cast<int>(cos_.size()); }
  bool is_constant() const { return cos_.empty(); }

  double operator()(double x) const {
    if (cos_.empty()) return a0_;
    if (pure_cos1_) return a0_ + cos_[0] * std::cos(kTwoPi * x);
    const cplx e = std::polar(1.0, kTwoPi * x);
    cplx z = e;
    double v = a0_;
    for (std::size_t k = 0; k < cos_.size(); ++k) {
      v += cos_[k] * z.real() + sin_[k] * z.imag();
      z *= e;
    }
    return v;
  }

  double derivative(double x) const {
    if (cos_.empty()) return 0.0;
    const cplx e = std::polar(1.0, kTwoPi * x);
    cplx z = e;
    double v = 0.0;
    for (std::size_t k = 0; k < cos_.size(); ++k) {
      double w = kTwoPi * static_cast<double>(k + 1);
      v += w * (-cos_[k] * z.imag() + sin_[k] * z.real());
      z *= e;
    }
    return v;
  }

  // Certified upper bounds from coefficient sums.
  double sup_bound() const {
    double s = std::abs(a0_);
    for (std::size_t k = 0; k < cos_.size(); ++k) s += std::abs(cos_[k]) + std::abs(sin_[k]);
    return s;
  }
  double derivative_sup_bound() const {
    double s = 0.0;
    for (std::size_t k = 0; k < cos_.size(); ++k)
      s += kTwoPi * static_cast<double>(k + 1) * (std::abs(cos_[k]) + std::abs(sin_[k]));
    return s;
  }

  // Dense grid estimate of sup|phi|; never larger than sup_bound().
  double sup_grid(int points = 4096) const {
    double m = 0.0;
    for (int i = 0; i < points; ++i) m = std::max(m, std::abs((*this)(static_cast<double>(i) / points)));
    return m;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "a0=" << a0_ << " cos=[";
    for (std::size_t k = 0; k < cos_.size(); ++k) os << (k ? "," : "") << cos_[k];
    os << "] sin=[";
    for (std::size_t k = 0; k < sin_.size(); ++k) os << (k ? "," : "") << sin_[k];
    os << "]";
    return os.str();
  }

 private:
  double a0_ = 0.0;
  std::vector<double> cos_, sin_;
  bool pure_cos1_ = false;
};

// Rationality of Delta is an input property, never a float test.
struct DeltaKind {
  bool rational = false;
  std::int64_t p = 0, q = 1;  // reduced, valid when rational
  std::string description;    // free text for the irrational case
};

class SystemParams {
 public:
  SystemParams(int b, double gamma_abs, double delta, TrigPoly phi, DeltaKind kind = {})
      : b_(b), gamma_abs_(gamma_abs), delta_(delta), phi_(std::move(phi)), kind_(std::move(kind)) {
    if (b_ < 2) throw Error("b must be ≥ 2");
    if (!(gamma_abs_ > 0.0 && gamma_abs_ < 1.0)) throw Error("gamma_abs must lie in (0,1)");
    if (kind_.rational) {
      if (kind_.q <= 0) throw Error("rational delta needs a positive denominator");
      std::int64_t g = std::gcd(kind_.p, kind_.q);
      kind_.p /= g;
      kind_.q /= g;
      kind_.p = ((kind_.p % kind_.q) + kind_.q) % kind_.q;
      delta_ = static_cast<double>(kind_.p) / static_cast<double>(kind_.q);
    }
    if (!(delta_ >= 0.0 && delta_ < 1.0)) throw Error("delta must lie in [0,1)");
    phi_sup_ = phi_.sup_bound();
  }

  static SystemParams with_rational_delta(int b, double gamma_abs, std::int64_t p, std::int64_t q, TrigPoly phi) {
    DeltaKind k;
    k.rational = true;
    k.p = p;
    k.q = q;
    return SystemParams(b, gamma_abs, 0.0, std::move(phi), k);
  }

  int b() const { return b_; }
  double gamma_abs() const { return gamma_abs_; }
  double delta() const { return delta_; }
  const TrigPoly& phi() const { return phi_; }
  const DeltaKind& delta_kind() const { return kind_; }
  bool delta_is_rational() const { return kind_.rational; }

  cplx gamma() const { return std::polar(gamma_abs_, kTwoPi * delta_); }

  // gamma^n with the angle reduced mod 1 before evaluation.
  cplx gamma_pow(int n) const {
    double turn;
    if (kind_.rational) {
      turn = static_cast<double>((static_cast<__int128>(n) * kind_.p) % kind_.q) / static_cast<double>(kind_.q);
    } else {
      double t = static_cast<double>(n) * delta_;
      turn = t - std::floor(t);
    }
    return std::polar(std::pow(gamma_abs_, n), kTwoPi * turn);
  }

  double phi_sup() const { return phi_sup_; }
  double attractor_radius() const { return phi_sup_ / (1.0 - gamma_abs_); }
  double r_phi_gamma() const { return 2.0 * attractor_radius(); }
  // Integer half-width of the box holding every fiber measure.
  std::int64_t box_radius() const { return static_cast<std::int64_t>(std::ceil(attractor_radius())) + 1; }

 private:
  int b_;
  double gamma_abs_;
  double delta_;
  TrigPoly phi_;
  DeltaKind kind_;
  double phi_sup_ = 0.0;
};

class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> symbols) : s_(std::move(symbols)) {}
  Word(std::initializer_list<int> symbols) : s_(symbols) {}

  // Digits "0110" for b <= 10, or dot separated "12.0.3".
  static Word parse(const std::string& text) {
    std::vector<int> out;
    if (text.find('.') != std::string::npos) {
      std::stringstream ss(text);
      std::string tok;
      while (std::getline(ss, tok, '.')) out.push_back(std::stoi(tok));
    } else {
      for (char c : text) {
        if (c < '0' || c > '9') throw Error("bad word symbol '" + std::string(1, c) + "'");
        out.push_back(c - '0');
      }
    }
    return Word(std::move(out));
  }

  std::string str(int b = 10) const {
    std::string r;
    for (std::size_t i = 0; i < s_.size(); ++i) {
      if (b > 10) {
        if (i) r += '.';
        r += std::to_string(s_[i]);
      } else {
        r += static_cast<char>('0' + s_[i]);
      }
    }
    return r;
  }

  // Word number `index` of length m in lexicographic order, first symbol most significant.
  static Word from_index(std::uint64_t index, int m, int b) {
    std::vector<int> s(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::uint64_t>(b));
      index /= static_cast<std::uint64_t>(b);
    }
    return Word(std::move(s));
  }

  std::size_t size() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  int operator[](std::size_t i) const { return s_[i]; }
  const std::vector<int>& symbols() const { return s_; }

  Word prefix(std::size_t k) const { return Word(std::vector<int>(s_.begin(), s_.begin() + static_cast<long>(k))); }
  Word operator+(const Word& o) const {
    std::vector<int> r = s_;
    r.insert(r.end(), o.s_.begin(), o.s_.end());
    return Word(std::move(r));
  }

  void check(int b) const {
    for (int v : s_)
      if (v < 0 || v >= b) throw Error("word symbol " + std::to_string(v) + " outside alphabet of size " + std::to_string(b));
  }

  auto operator<=>(const Word&) const = default;

 private:
  std::vector<int> s_;
};

// w(x) = (x + w_1 + w_2 b + ... + w_m b^{m-1}) / b^m.
inline double word_address(double x, const Word& w, int b) {
  if (w.empty()) throw Error("empty address");
  double a = x;
  for (std::size_t n = 0; n < w.size(); ++n) a = (a + w[n]) / b;
  return a;
}

// S(x,w) = sum_{n=1}^{|w|} gamma^{n-1} phi(a_n), evaluated by Horner from the deepest term.
inline cplx symbolic_sum(const SystemParams& p, double x, const Word& w) {
  const int b = p.b();
  std::vector<double> a(w.size());
  double cur = x;
  for (std::size_t n = 0; n < w.size(); ++n) {
    cur = (cur + w[n]) / b;
    a[n] = cur;
  }
  const cplx g = p.gamma();
  cplx acc = 0.0;
  for (std::size_t n = w.size(); n-- > 0;) acc = p.phi()(a[n]) + g * acc;
  return acc;
}

inline cplx symbolic_sum_derivative(const SystemParams& p, double x, const Word& w) {
  const int b = p.b();
  std::vector<double> a(w.size());
  double cur = x;
  for (std::size_t n = 0; n < w.size(); ++n) {
    cur = (cur + w[n]) / b;
    a[n] = cur;
  }
  const cplx g = p.gamma() / static_cast<double>(b);
  cplx acc = 0.0;
  for (std::size_t n = w.size(); n-- > 0;) acc = p.phi().derivative(a[n]) + g * acc;
  return acc / static_cast<double>(b);
}

// ||phi|| |gamma|^m / (1 - |gamma|).
inline double symbolic_sum_tail_bound(const SystemParams& p, int m) {
  if (m < 0) throw Error("tail bound needs m >= 0");
  return p.phi_sup() * std::pow(p.gamma_abs(), m) / (1.0 - p.gamma_abs());
}

// Bound on the derivative tail after m symbols: ||phi'|| |gamma|^m b^{-m} / (b - |gamma|).
inline double derivative_tail_bound(const SystemParams& p, int m) {
  double g = p.gamma_abs();
  double b = p.b();
  return p.phi().derivative_sup_bound() * std::pow(g / b, m) / (b - g);
}

inline double cocycle_check(const SystemParams& p, double x, const Word& w, const Word& i) {
  if (w.empty()) throw Error("empty address");
  cplx lhs = symbolic_sum(p, x, w + i);
  cplx rhs = symbolic_sum(p, x, w) + p.gamma_pow(static_cast<int>(w.size())) * symbolic_sum(p, word_address(x, w, p.b()), i);
  return std::abs(lhs - rhs);
}

// |S(x,wi) - S(x,wj) - gamma^{|w|} (S(w(x),i) - S(w(x),j))|.
inline double difference_check(const SystemParams& p, double x, const Word& w, const Word& i, const Word& j) {
  if (w.empty()) throw Error("empty address");
  double y = word_address(x, w, p.b());
  cplx lhs = symbolic_sum(p, x, w + i) - symbolic_sum(p, x, w + j);
  cplx rhs = p.gamma_pow(static_cast<int>(w.size())) * (symbolic_sum(p, y, i) - symbolic_sum(p, y, j));
  return std::abs(lhs - rhs);
}

// Smallest nh with |gamma|^nh <= b^-n; then b^-n < |gamma|^(nh-1) holds automatically.
inline int scale_hat(const SystemParams& p, int n) {
  if (n < 0) throw Error("scale conversion needs n >= 0");
  const long double g = p.gamma_abs();
  const long double target = std::pow(static_cast<long double>(p.b()), -static_cast<long double>(n));
  int nh = static_cast<int>(std::ceil(n * std::log(static_cast<double>(p.b())) / -std::log(p.gamma_abs())));
  nh = std::max(nh, 0);
  while (std::pow(g, static_cast<long double>(nh)) > target) ++nh;
  while (nh > 0 && std::pow(g, static_cast<long double>(nh - 1)) <= target) --nh;
  return nh;
}

// Smallest nt with b^-nt <= |gamma|^n; then |gamma|^n < b^(-nt+1).
inline int scale_tilde(const SystemParams& p, int n) {
  if (n < 0) throw Error("scale conversion needs n >= 0");
  const long double bb = p.b();
  const long double target = std::pow(static_cast<long double>(p.gamma_abs()), static_cast<long double>(n));
  int nt = static_cast<int>(std::ceil(-n * std::log(p.gamma_abs()) / std::log(static_cast<double>(p.b()))));
  nt = std::max(nt, 0);
  while (std::pow(bb, -static_cast<long double>(nt)) > target) ++nt;
  while (nt > 0 && std::pow(bb, -static_cast<long double>(nt - 1)) <= target) --nt;
  return nt;
}

}  // namespace solenoid
