#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

// Every key belongs to exactly one section. Keys may also appear before any
// section header.
inline const std::map<std::string, std::string>& config_keys() {
  static const std::map<std::string, std::string> keys = [] {
    std::map<std::string, std::string> k;
    for (const char* s : {"b", "gamma_abs", "delta", "delta_kind", "phi", "phi_a0", "phi_cos", "phi_sin"}) k[s] = "system";
    for (const char* s : {"max_words", "max_points", "threads", "pair_budget"}) k[s] = "budgets";
    for (const char* s : {"experiment", "seed", "output_dir"}) k[s] = "run";
    for (const char* s : {"x",     "xs",        "theta",       "thetas",     "n",         "n_lo",      "n_hi",       "q",
                          "q_list", "depth",    "mode",        "count",      "x_count",   "words_per_x", "attractor_mode",
                          "burn_in", "box_lo",  "box_hi",      "gamma_list", "method",    "h_depth",   "x_grid",     "theta_grid",
                          "suffix", "eps0",     "eps_c",       "n_list",     "t_min",     "t_max",     "z_grid",     "sample_depth",
                          "samples", "ell",     "k_max",       "quad",       "theta0",    "orbit_n",   "h",          "porosity_delta",
                          "m",      "n1",       "n2",          "write_points", "jitter",  "annulus",   "rho",        "witness"})
      k[s] = "experiment";
    return k;
  }();
  return keys;
}

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

struct ConfigValue {
  std::string text;
  int line = 0;  // 0 for command-line overrides and defaults
};

class RunConfig {
 public:
  std::map<std::string, ConfigValue> values;
  std::vector<std::string> warnings;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  void set(const std::string& key, const std::string& text, int line = 0) {
    if (!config_keys().count(key)) throw Error(where(line) + "unknown key " + key);
    values[key] = {text, line};
  }

  std::string str(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second.text;
  }

  double real(const std::string& key, double def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    return parse_real(it->second);
  }

  std::int64_t integer(const std::string& key, std::int64_t def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    return parse_int(it->second);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const auto& v = it->second;
    try {
      std::size_t pos = 0;
      if (!v.text.empty() && v.text[0] == '-') throw std::invalid_argument("negative");
      auto r = std::stoull(v.text, &pos, 0);
      if (pos != v.text.size()) throw std::invalid_argument("trailing");
      return r;
    } catch (const std::logic_error&) {
      throw Error(malformed(key, v));
    }
  }

  bool boolean(const std::string& key, bool def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const auto& t = it->second.text;
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw Error(malformed(key, it->second));
  }

  // Comma separated reals, or grid(N) for {0, 1/N, ..., (N-1)/N}.
  std::vector<double> reals(const std::string& key, std::vector<double> def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const auto& v = it->second;
    std::vector<double> out;
    if (v.text.rfind("grid(", 0) == 0 && v.text.back() == ')') {
      ConfigValue inner{v.text.substr(5, v.text.size() - 6), v.line};
      std::int64_t n = parse_int(inner, key);
      if (n < 1) throw Error(malformed(key, v));
      for (std::int64_t i = 0; i < n; ++i) out.push_back(static_cast<double>(i) / static_cast<double>(n));
      return out;
    }
    for (const auto& tok : split(v.text)) out.push_back(parse_real({tok, v.line}, key));
    if (out.empty()) throw Error(malformed(key, v));
    return out;
  }

  // Comma separated integers, or lo..hi.
  std::vector<int> ints(const std::string& key, std::vector<int> def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const auto& v = it->second;
    std::vector<int> out;
    auto dots = v.text.find("..");
    if (dots != std::string::npos) {
      auto lo = parse_int({trim(v.text.substr(0, dots)), v.line}, key);
      auto hi = parse_int({trim(v.text.substr(dots + 2)), v.line}, key);
      if (hi < lo) throw Error(malformed(key, v));
      for (auto i = lo; i <= hi; ++i) out.push_back(static_cast<int>(i));
      return out;
    }
    for (const auto& tok : split(v.text)) out.push_back(static_cast<int>(parse_int({tok, v.line}, key)));
    if (out.empty()) throw Error(malformed(key, v));
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = values.find(key);
    return it == values.end() ? 0 : it->second.line;
  }

  std::string where_key(const std::string& key) const { return where(line_of(key)); }

  static std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

  // Hash of everything that can change results. Thread count and output
  // location are excluded so runs stay byte-identical across them.
  std::uint64_t hash() const {
    Fnv1a h;
    for (const auto& [k, v] : values) {
      if (k == "threads" || k == "output_dir" || k == "seed") continue;
      h.update(k);
      h.update("=");
      h.update(v.text);
      h.update("\n");
    }
    return h.digest();
  }

  std::string canonical() const {
    std::ostringstream o;
    for (const auto& [k, v] : values) o << k << " = " << v.text << '\n';
    return o.str();
  }

  SystemParams system() const;

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(tok);
    }
    return out;
  }

  std::string malformed(const std::string& key, const ConfigValue& v) const {
    return where(v.line) + "malformed value for " + key + ": '" + v.text + "'";
  }

  double parse_real(const ConfigValue& v, const std::string& key = "") const {
    try {
      std::size_t pos = 0;
      double r = std::stod(v.text, &pos);
      if (pos != v.text.size() || !std::isfinite(r)) throw std::invalid_argument("trailing");
      return r;
    } catch (const std::logic_error&) {
      throw Error(malformed(key.empty() ? key_of(v) : key, v));
    }
  }

  std::int64_t parse_int(const ConfigValue& v, const std::string& key = "") const {
    try {
      std::size_t pos = 0;
      long long r = std::stoll(v.text, &pos, 10);
      if (pos != v.text.size()) throw std::invalid_argument("trailing");
      return r;
    } catch (const std::logic_error&) {
      throw Error(malformed(key.empty() ? key_of(v) : key, v));
    }
  }

  std::string key_of(const ConfigValue& v) const {
    for (const auto& [k, x] : values)
      if (&x == &v) return k;
    return "value";
  }
};

namespace detail {

// rational(p,q) or irrational(text).
inline DeltaKind parse_delta_kind(const std::string& text, int line) {
  DeltaKind k;
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw Error(RunConfig::where(line) + "delta_kind must be rational(p,q) or irrational(description)");
  std::string head = trim(text.substr(0, open)), body = text.substr(open + 1, text.size() - open - 2);
  if (head == "irrational") {
    k.rational = false;
    k.description = trim(body);
    return k;
  }
  if (head != "rational") throw Error(RunConfig::where(line) + "delta_kind must be rational(p,q) or irrational(description)");
  auto comma = body.find(',');
  if (comma == std::string::npos) throw Error(RunConfig::where(line) + "rational delta needs p,q");
  try {
    k.rational = true;
    k.p = std::stoll(trim(body.substr(0, comma)));
    k.q = std::stoll(trim(body.substr(comma + 1)));
  } catch (const std::logic_error&) {
    throw Error(RunConfig::where(line) + "rational delta needs integer p,q");
  }
  if (k.q <= 0) throw Error(RunConfig::where(line) + "rational delta needs a positive denominator");
  return k;
}

inline std::vector<double> coefficient_list(const RunConfig& c, const std::string& key) {
  if (!c.has(key)) return {};
  return c.reals(key, {});
}

}  // namespace detail

inline SystemParams RunConfig::system() const {
  const std::int64_t b = integer("b", 2);
  if (b < 2) throw Error(where_key("b") + "b must be ≥ 2");
  if (b > 64) throw Error(where_key("b") + "b must be ≤ 64");
  const double g = real("gamma_abs", 0.5);
  if (!(g > 0.0 && g < 1.0)) throw Error(where_key("gamma_abs") + "gamma_abs must lie in (0,1)");

  TrigPoly phi = TrigPoly::cosine();
  const bool coeffs = has("phi_a0") || has("phi_cos") || has("phi_sin");
  if (has("phi") && coeffs) throw Error(where_key("phi") + "give either phi or phi_a0/phi_cos/phi_sin, not both");
  if (has("phi")) {
    std::string t = str("phi", "cos");
    if (t == "cos") {
      phi = TrigPoly::cosine();
    } else if (t == "sin") {
      phi = TrigPoly::sine();
    } else if (t == "zero") {
      phi = TrigPoly::constant(0.0);
    } else if (t.rfind("const(", 0) == 0 && t.back() == ')') {
      try {
        std::size_t pos = 0;
        std::string inner = trim(t.substr(6, t.size() - 7));
        double v = std::stod(inner, &pos);
        if (pos != inner.size()) throw std::invalid_argument("trailing");
        phi = TrigPoly::constant(v);
      } catch (const std::logic_error&) {
        throw Error(where_key("phi") + "malformed value for phi: '" + t + "'");
      }
    } else {
      throw Error(where_key("phi") + "phi must be cos, sin, zero or const(c)");
    }
  } else if (coeffs) {
    auto cs = detail::coefficient_list(*this, "phi_cos");
    auto ss = detail::coefficient_list(*this, "phi_sin");
    phi = TrigPoly(real("phi_a0", 0.0), cs, ss);
  }

  DeltaKind kind;
  kind.description = "sqrt(2)-1";
  if (has("delta_kind")) kind = detail::parse_delta_kind(str("delta_kind", ""), line_of("delta_kind"));
  double delta = std::sqrt(2.0) - 1.0;
  if (kind.rational) {
    double exact = static_cast<double>(((kind.p % kind.q) + kind.q) % kind.q) / static_cast<double>(kind.q);
    if (has("delta") && std::abs(real("delta", 0.0) - exact) > 1e-12)
      throw Error(where_key("delta") + "delta disagrees with rational(" + std::to_string(kind.p) + "," + std::to_string(kind.q) + ")");
    delta = exact;
  } else if (has("delta")) {
    delta = real("delta", 0.0);
    if (!has("delta_kind")) kind.description = str("delta", "");
  }
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(where_key("delta") + "delta must lie in [0,1)");
  return SystemParams(static_cast<int>(b), g, delta, phi, kind);
}

// key = value lines, # comments, [section] headers. Duplicates keep the last
// value and leave a warning.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw Error(RunConfig::where(line) + "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "system" && section != "budgets" && section != "run" && section != "experiment")
        throw Error(RunConfig::where(line) + "unknown section " + section);
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(RunConfig::where(line) + "expected key = value");
    std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    auto k = config_keys().find(key);
    if (k == config_keys().end()) throw Error(RunConfig::where(line) + "unknown key " + key);
    if (!section.empty() && k->second != section) throw Error(RunConfig::where(line) + "key " + key + " belongs in [" + k->second + "]");
    if (value.empty()) throw Error(RunConfig::where(line) + "missing value for " + key);
    if (c.has(key))
      c.warnings.push_back("line " + std::to_string(line) + ": duplicate key " + key + " (line " + std::to_string(c.line_of(key)) +
                           "), last value wins");
    c.set(key, value, line);
  }
  c.system();
  // Scalar budgets are validated eagerly so errors name their line.
  for (const char* k : {"max_words", "max_points", "pair_budget", "seed"}) c.unsigned_integer(k, 0);
  if (c.integer("threads", 0) < 0) throw Error(c.where_key("threads") + "threads must be >= 0");
  return c;
}

}  // namespace solenoid
