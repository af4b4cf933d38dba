#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace solenoid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Floor division for signed cell indices.
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// b^e as an exact integer; throws when the result leaves int64 range.
inline std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > std::numeric_limits<std::int64_t>::max() / b)
      throw Error("integer power overflow: " + std::to_string(b) + "^" + std::to_string(e));
    r *= b;
  }
  return r;
}

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error("weight overflow");
  return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error("weight overflow");
  return r;
}

inline double log_base(double v, int b) { return std::log(v) / std::log(static_cast<double>(b)); }

// f_b(p) = -p log_b p with f_b(0) = 0.
inline double fb(double p, int b) {
  if (p <= 0.0) return 0.0;
  return -p * std::log(p) / std::log(static_cast<double>(b));
}

// Binary entropy term H(t) = f_b(t) + f_b(1-t).
inline double binary_entropy(double t, int b) { return fb(t, b) + fb(1.0 - t, b); }

// 64-bit FNV-1a, used for config hashes and dump digests.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    auto p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ULL;
};

}  // namespace solenoid
