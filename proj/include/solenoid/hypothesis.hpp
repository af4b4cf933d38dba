#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "solenoid/conservation.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/projection.hpp"
#include "solenoid/rng.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

// ---------------------------------------------------------------------------
// Condition (H)

// sup over the x grid of |S(x,i) - S(x,j)|.
inline double pair_gap(const SystemParams& p, const Word& i, const Word& j, const std::vector<double>& x_grid) {
  double m = 0.0;
  for (double x : x_grid) m = std::max(m, std::abs(symbolic_sum(p, x, i) - symbolic_sum(p, x, j)));
  return m;
}

struct HPair {
  Word i, j;
  double sup = 0.0;
};

struct ConditionHReport {
  int depth = 0;
  std::uint64_t pairs = 0;
  double noise = 0.0;          // 2 tail(depth): truncation slack for infinite continuations
  double min_sup = 0.0;        // minimal sup_x |S(x,i)-S(x,j)|
  double min_projected = 0.0;  // same with the sup also over the theta grid of |pi_theta(.)|
  HPair argmin;
  std::uint64_t candidate_count = 0;
  std::vector<HPair> candidates;  // first few pairs at or below the noise level
  bool consistent = false;
  std::string verdict() const { return consistent ? "consistent with (H)" : "violation witness"; }
};

// Pairs of depth-D words whose first symbols differ. The cocycle reduction
// makes these sufficient.
inline ConditionHReport condition_h_probe(const SystemParams& p, std::uint64_t pair_budget, int depth, const std::vector<double>& x_grid,
                                          const std::vector<double>& theta_grid, int threads = 0, std::size_t max_listed = 32) {
  if (depth < 1) throw Error("condition-H probe needs depth >= 1");
  if (x_grid.empty()) throw Error("condition-H probe needs a non-empty x grid");
  const int b = p.b();
  const std::uint64_t words = static_cast<std::uint64_t>(ipow(b, depth));
  const std::uint64_t block = words / static_cast<std::uint64_t>(b);
  const std::uint64_t pairs = checked_mul(words, words - block) / 2;
  if (pairs > pair_budget) throw Error("condition-H probe needs " + std::to_string(pairs) + " pairs, budget is " + std::to_string(pair_budget));

  const std::size_t G = x_grid.size();
  std::vector<cplx> val(words * G);
  detail::Walker walker(p);
  parallel_blocks(G, resolve_threads(threads), [&](std::size_t g) {
    std::uint64_t idx = 0;
    auto leaf = [&](const detail::WalkState& st) { val[(idx++) * G + g] = st.s; };
    detail::dfs(walker, walker.start(x_grid[g]), depth, b, leaf);
  });

  std::vector<std::pair<double, double>> tc;
  for (double t : theta_grid) tc.push_back(turn_cos_sin(t));

  ConditionHReport r;
  r.depth = depth;
  r.pairs = pairs;
  r.noise = 2.0 * symbolic_sum_tail_bound(p, depth) + 1e-12;

  struct Partial {
    double min_sup = std::numeric_limits<double>::infinity(), min_proj = std::numeric_limits<double>::infinity();
    std::uint64_t ai = 0, aj = 0, count = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> listed;
    std::vector<double> listed_sup;
  };
  std::vector<Partial> parts(words);
  parallel_blocks(words, resolve_threads(threads), [&](std::size_t i) {
    Partial& pt = parts[i];
    const std::uint64_t jstart = (i / block + 1) * block;
    for (std::uint64_t j = jstart; j < words; ++j) {
      double sup = 0.0, proj = 0.0;
      for (std::size_t g = 0; g < G; ++g) {
        cplx d = val[i * G + g] - val[j * G + g];
        sup = std::max(sup, std::abs(d));
        for (auto [c, s] : tc) proj = std::max(proj, std::abs(d.real() * c + d.imag() * s));
      }
      if (tc.empty()) proj = sup;
      if (sup < pt.min_sup) {
        pt.min_sup = sup;
        pt.ai = i;
        pt.aj = j;
      }
      pt.min_proj = std::min(pt.min_proj, proj);
      if (sup <= r.noise) {
        ++pt.count;
        if (pt.listed.size() < max_listed) {
          pt.listed.push_back({i, j});
          pt.listed_sup.push_back(sup);
        }
      }
    }
  });

  r.min_sup = std::numeric_limits<double>::infinity();
  r.min_projected = std::numeric_limits<double>::infinity();
  for (const auto& pt : parts) {
    if (pt.min_sup < r.min_sup) {
      r.min_sup = pt.min_sup;
      r.argmin = {Word::from_index(pt.ai, depth, b), Word::from_index(pt.aj, depth, b), pt.min_sup};
    }
    r.min_projected = std::min(r.min_projected, pt.min_proj);
    r.candidate_count += pt.count;
    for (std::size_t k = 0; k < pt.listed.size() && r.candidates.size() < max_listed; ++k)
      r.candidates.push_back({Word::from_index(pt.listed[k].first, depth, b), Word::from_index(pt.listed[k].second, depth, b), pt.listed_sup[k]});
  }
  r.consistent = r.candidate_count == 0;
  return r;
}

// ---------------------------------------------------------------------------
// Exceptional gamma set

struct PolarCell {
  double r_lo, r_hi, t_lo, t_hi;  // radius and angle in turns
  double area() const { return 0.5 * (r_hi * r_hi - r_lo * r_lo) * kTwoPi * (t_hi - t_lo); }
  bool contains(const PolarCell& o) const { return o.r_lo >= r_lo && o.r_hi <= r_hi && o.t_lo >= t_lo && o.t_hi <= t_hi; }
};

struct GammaScan {
  int b = 2;
  double x_prime = 0.0;
  int m = 1;
  double r1 = 0.0, r2 = 0.0, rho = 0.0;
  int terms = 0;
  bool constant_phi = false;
  std::vector<double> suspect_fraction;           // per round
  std::vector<std::vector<PolarCell>> suspects;  // per round
  double min_cleared_value = 0.0;                 // smallest certified lower bound on |g| over cleared cells
};

// g(gamma) = sum_n gamma^{n-1} (phi((x'+1)/b^n) - phi(x'/b^n)).
inline std::vector<double> gamma_exception_coefficients(const TrigPoly& phi, int b, double x_prime, int terms) {
  std::vector<double> c(static_cast<std::size_t>(terms));
  double s = 1.0;
  for (int n = 1; n <= terms; ++n) {
    s /= b;
    c[static_cast<std::size_t>(n - 1)] = phi((x_prime + 1.0) * s) - phi(x_prime * s);
  }
  return c;
}

inline cplx gamma_exception_value(const std::vector<double>& c, cplx gamma) {
  cplx acc = 0.0;
  for (std::size_t n = c.size(); n-- > 0;) acc = c[n] + gamma * acc;
  return acc;
}

inline GammaScan gamma_exception_scan(const TrigPoly& phi, int b, double x_prime, int m, double r1, double r2, double rho, int radial_cells,
                                      int angular_cells, int rounds) {
  if (b < 2) throw Error("b must be ≥ 2");
  if (!(r1 >= 0 && r1 < r2 && r2 < 1)) throw Error("annulus needs 0 <= r1 < r2 < 1");
  if (m < 1) throw Error("witness index m must be >= 1");
  if (radial_cells < 1 || angular_cells < 1 || rounds < 0) throw Error("bad annulus grid");
  GammaScan out;
  out.b = b;
  out.x_prime = x_prime;
  out.m = m;
  out.r1 = r1;
  out.r2 = r2;
  out.rho = rho;
  const double sup = phi.sup_bound();
  const double full = 0.5 * (r2 * r2 - r1 * r1) * kTwoPi;

  std::vector<PolarCell> cells;
  for (int i = 0; i < radial_cells; ++i)
    for (int k = 0; k < angular_cells; ++k)
      cells.push_back({r1 + (r2 - r1) * i / radial_cells, r1 + (r2 - r1) * (i + 1) / radial_cells, static_cast<double>(k) / angular_cells,
                       static_cast<double>(k + 1) / angular_cells});

  out.constant_phi = phi.derivative_sup_bound() == 0.0;
  if (out.constant_phi) {
    for (int r = 0; r <= rounds; ++r) {
      out.suspect_fraction.push_back(1.0);
      out.suspects.push_back(cells);
    }
    return out;
  }
  double s = std::pow(static_cast<double>(b), -m);
  if (std::abs(phi((x_prime + 1.0) * s) - phi(x_prime * s)) == 0.0)
    throw Error("witness fails: phi(x'/b^m) = phi((x'+1)/b^m); choose another m or x'");

  // Truncation slack and Lipschitz constant of g on the disc of radius r2.
  const double target = std::max(rho, 1e-9) * 1e-3;
  int terms = 1;
  while (2.0 * sup * std::pow(r2, terms) / (1.0 - r2) > target) ++terms;
  out.terms = terms;
  const double tail = 2.0 * sup * std::pow(r2, terms) / (1.0 - r2);
  const double lip = 2.0 * sup / ((1.0 - r2) * (1.0 - r2));
  auto coeff = gamma_exception_coefficients(phi, b, x_prime, terms);

  out.min_cleared_value = std::numeric_limits<double>::infinity();
  for (int round = 0; round <= rounds; ++round) {
    std::vector<PolarCell> suspect;
    for (const auto& c : cells) {
      double rm = 0.5 * (c.r_lo + c.r_hi), tm = 0.5 * (c.t_lo + c.t_hi);
      double reach = 0.5 * (c.r_hi - c.r_lo) + 0.5 * kTwoPi * c.r_hi * (c.t_hi - c.t_lo);
      double lower = std::abs(gamma_exception_value(coeff, std::polar(rm, kTwoPi * tm))) - lip * reach - tail;
      if (lower > rho) {
        out.min_cleared_value = std::min(out.min_cleared_value, lower);
      } else {
        suspect.push_back(c);
      }
    }
    double area = 0.0;
    for (const auto& c : suspect) area += c.area();
    out.suspect_fraction.push_back(area / full);
    out.suspects.push_back(suspect);
    if (round == rounds) break;
    cells.clear();
    for (const auto& c : suspect) {
      double rm = 0.5 * (c.r_lo + c.r_hi), tm = 0.5 * (c.t_lo + c.t_hi);
      cells.push_back({c.r_lo, rm, c.t_lo, tm});
      cells.push_back({c.r_lo, rm, tm, c.t_hi});
      cells.push_back({rm, c.r_hi, c.t_lo, tm});
      cells.push_back({rm, c.r_hi, tm, c.t_hi});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponential separation

struct SeparationRow {
  int n = 0, nhat = 0;
  double threshold = 0.0;
  double min_gap = 0.0;  // +inf for a single point
  bool pass = false;
  bool sampled = false;
};

struct SeparationCertificate {
  double eps0 = 0.0;
  int ell = 0;
  Word suffix;
  double x = 0.0;
  std::vector<SeparationRow> rows;

  std::vector<int> passing_levels() const {
    std::vector<int> r;
    for (const auto& row : rows)
      if (row.pass && !row.sampled) r.push_back(row.n);
    return r;
  }

  std::string str() const {
    std::ostringstream o;
    o << "SEPCERT v1\n";
    o << "n,nhat,threshold,min_gap,pass\n";
    o << std::setprecision(17);
    for (const auto& r : rows) {
      o << r.n << ',' << r.nhat << ',' << r.threshold << ',';
      if (std::isinf(r.min_gap))
        o << "inf";
      else
        o << r.min_gap;
      o << ',' << (r.sampled ? "sampled" : (r.pass ? "1" : "0")) << '\n';
    }
    return o.str();
  }

  static SeparationCertificate parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SeparationCertificate c;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    }
    if (line != "SEPCERT v1") throw Error("not a SEPCERT v1 certificate");
    if (!std::getline(in, line) || line != "n,nhat,threshold,min_gap,pass") throw Error("SEPCERT: missing column header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) f.push_back(tok);
      if (f.size() != 5) throw Error("SEPCERT: bad row '" + line + "'");
      SeparationRow r;
      r.n = std::stoi(f[0]);
      r.nhat = std::stoi(f[1]);
      r.threshold = std::stod(f[2]);
      r.min_gap = f[3] == "inf" ? std::numeric_limits<double>::infinity() : std::stod(f[3]);
      r.sampled = f[4] == "sampled";
      r.pass = f[4] == "1";
      c.rows.push_back(r);
    }
    return c;
  }
};

// Exact closest pair: sort by real part, sweep with the running best as the window.
inline double closest_pair_distance(std::vector<cplx> pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size() && best > 0.0; ++i) {
    for (std::size_t j = i; j-- > 0;) {
      if (pts[i].real() - pts[j].real() >= best) break;
      best = std::min(best, std::abs(pts[i] - pts[j]));
    }
  }
  return best;
}

// X_n = {S(x, j w) : j in Lambda^{n-l}}; threshold sqrt(2) eps0^{nhat}.
inline SeparationCertificate exponential_separation_test(const SystemParams& p, double x, const Word& w, double eps0, const std::vector<int>& n_list,
                                                         std::uint64_t max_points = 1ULL << 22, std::uint64_t seed = 0) {
  w.check(p.b());
  if (!(eps0 > 0.0 && eps0 < 1.0)) throw Error("eps0 must lie in (0,1)");
  const int ell = static_cast<int>(w.size());
  SeparationCertificate cert;
  cert.eps0 = eps0;
  cert.ell = ell;
  cert.suffix = w;
  cert.x = x;
  const int b = p.b();
  detail::Walker walker(p);
  for (int n : n_list) {
    if (n < ell) throw Error("separation level n must be >= suffix length");
    SeparationRow row;
    row.n = n;
    row.nhat = scale_hat(p, n);
    row.threshold = std::sqrt(2.0) * std::pow(eps0, row.nhat);
    const int k = n - ell;
    std::vector<cplx> pts;
    const double nwords = std::pow(static_cast<double>(b), k);
    if (nwords <= static_cast<double>(max_points)) {
      pts.reserve(static_cast<std::size_t>(nwords));
      auto leaf = [&](const detail::WalkState& st) { pts.push_back(walker.walk(st, w).s); };
      detail::dfs(walker, walker.start(x), k, b, leaf);
    } else {
      // A sample's minimum gap is only an upper bound for the true one.
      row.sampled = true;
      SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
      pts.reserve(max_points);
      for (std::uint64_t s = 0; s < max_points; ++s) {
        auto st = walker.start(x);
        for (int i = 0; i < k; ++i) st = walker.step(st, static_cast<int>(rng.below(static_cast<std::uint64_t>(b))));
        pts.push_back(walker.walk(st, w).s);
      }
    }
    row.min_gap = closest_pair_distance(std::move(pts));
    row.pass = row.min_gap > row.threshold;
    cert.rows.push_back(row);
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Transversality

struct TransversalityWitness {
  bool found = false;
  int t = 0;
  double xi1 = 0.0;
  Word h, h2, a;
  double a1_margin = 0.0, a2_margin = 0.0;  // certified minima of |S'| and |S'_i - S'_j| over the grid
  double a3_lhs = 0.0;                      // ||phi'|| / ((1-|gamma|) b^t)
  int grid = 0;

  std::string str(int b) const {
    if (!found) return "TRANSWIT v1 none";
    std::ostringstream o;
    o << std::setprecision(17) << "TRANSWIT v1 " << t << ' ' << xi1 << ' ' << h.str(b) << ' ' << h2.str(b) << ' ' << a.str(b);
    return o.str();
  }
};

// I_a = [a(0), a(0) + b^-t).
inline double word_interval_start(const Word& a, int b) { return word_address(0.0, a, b); }

inline double transversality_a3(const SystemParams& p, int t) {
  return p.phi().derivative_sup_bound() / ((1.0 - p.gamma_abs()) * std::pow(static_cast<double>(p.b()), t));
}

// For each t in [t_min, t_max] scans every (h, h', a) in Lambda^t. On the grid,
// every continuation of h stays within the derivative tail of S'(z, h), so
//   A1 >= min |S'(z,h)| - tail,  A2 >= min |S'(z,h) - S'(z,h')| - 2 tail.
// The first t holding a positive margin with (A.3) returns its best triple.
inline TransversalityWitness transversality_search(const SystemParams& p, int t_min, int t_max, int grid, int threads = 0,
                                                   std::uint64_t max_triples = 1ULL << 27) {
  if (t_min < 1 || t_max < t_min) throw Error("transversality search needs 1 <= t_min <= t_max");
  if (grid < 1) throw Error("transversality grid must be positive");
  const int b = p.b();
  TransversalityWitness best;
  best.grid = grid;
  for (int t = t_min; t <= t_max; ++t) {
    const std::uint64_t nw = static_cast<std::uint64_t>(ipow(b, t));
    if (static_cast<double>(nw) * nw * nw > static_cast<double>(max_triples)) break;
    const double tail = derivative_tail_bound(p, t);
    const double a3 = transversality_a3(p, t);
    const double width = std::pow(static_cast<double>(b), -t);
    struct Best {
      double margin = -std::numeric_limits<double>::infinity();
      double a1 = 0, a2 = 0;
      std::uint64_t h = 0, h2 = 0;
    };
    std::vector<Best> per_a(nw);
    parallel_blocks(nw, resolve_threads(threads), [&](std::size_t ai) {
      Word a = Word::from_index(ai, t, b);
      double z0 = word_interval_start(a, b);
      std::vector<cplx> d(nw * static_cast<std::size_t>(grid));
      std::vector<double> mag(nw, std::numeric_limits<double>::infinity());
      for (std::uint64_t h = 0; h < nw; ++h) {
        Word hw = Word::from_index(h, t, b);
        for (int g = 0; g < grid; ++g) {
          cplx v = symbolic_sum_derivative(p, z0 + (g + 0.5) / grid * width, hw);
          d[h * grid + g] = v;
          mag[h] = std::min(mag[h], std::abs(v));
        }
      }
      Best& bt = per_a[ai];
      for (std::uint64_t h = 0; h < nw; ++h) {
        double m1h = mag[h] - tail;
        if (m1h <= bt.margin) continue;
        for (std::uint64_t h2 = h + 1; h2 < nw; ++h2) {
          double m1 = std::min(m1h, mag[h2] - tail);
          if (m1 <= bt.margin) continue;
          double diff = std::numeric_limits<double>::infinity();
          for (int g = 0; g < grid; ++g) diff = std::min(diff, std::abs(d[h * grid + g] - d[h2 * grid + g]));
          double m2 = diff - 2.0 * tail;
          double m = std::min(m1, m2);
          if (m > bt.margin) bt = {m, m1, m2, h, h2};
        }
      }
    });
    std::size_t arg = 0;
    for (std::size_t i = 1; i < per_a.size(); ++i)
      if (per_a[i].margin > per_a[arg].margin) arg = i;
    const Best& bt = per_a[arg];
    if (bt.margin > 0.0 && a3 < bt.margin / 2.0 / 4.0) {
      best.found = true;
      best.t = t;
      best.xi1 = bt.margin / 2.0;
      best.h = Word::from_index(bt.h, t, b);
      best.h2 = Word::from_index(bt.h2, t, b);
      best.a = Word::from_index(arg, t, b);
      best.a1_margin = bt.a1;
      best.a2_margin = bt.a2;
      best.a3_lhs = a3;
      return best;
    }
  }
  return best;
}

struct TransversalityCheck {
  double min_a1 = 0.0, min_a2 = 0.0;
  bool a1 = false, a2 = false, a3 = false;
  bool ok() const { return a1 && a2 && a3; }
};

// Independent re-evaluation on a finer grid with sampled continuations
// i = h u, j = h' v of length sample_depth.
inline TransversalityCheck verify_transversality(const SystemParams& p, const TransversalityWitness& w, int grid, int sample_depth, int samples,
                                                 std::uint64_t seed) {
  if (!w.found) throw Error("no witness to verify");
  const int b = p.b();
  TransversalityCheck c;
  c.min_a1 = c.min_a2 = std::numeric_limits<double>::infinity();
  const double z0 = word_interval_start(w.a, b);
  const double width = std::pow(static_cast<double>(b), -w.t);
  SplitMix64 rng(seed);
  const double rest = derivative_tail_bound(p, w.t + sample_depth);
  for (int s = 0; s < samples; ++s) {
    std::vector<int> u(static_cast<std::size_t>(sample_depth)), v(static_cast<std::size_t>(sample_depth));
    for (auto& d : u) d = static_cast<int>(rng.below(static_cast<std::uint64_t>(b)));
    for (auto& d : v) d = static_cast<int>(rng.below(static_cast<std::uint64_t>(b)));
    Word i = w.h + Word(u), j = w.h2 + Word(v);
    for (int g = 0; g < grid; ++g) {
      double z = z0 + (g + 0.5) / grid * width;
      cplx di = symbolic_sum_derivative(p, z, i), dj = symbolic_sum_derivative(p, z, j);
      c.min_a1 = std::min({c.min_a1, std::abs(di) - rest, std::abs(dj) - rest});
      c.min_a2 = std::min(c.min_a2, std::abs(di - dj) - 2.0 * rest);
    }
  }
  c.a1 = c.min_a1 > w.xi1;
  c.a2 = c.min_a2 > w.xi1;
  c.a3 = transversality_a3(p, w.t) < w.xi1 / 4.0;
  return c;
}

// ---------------------------------------------------------------------------
// Atomlessness and boundary mass

inline double max_cell_mass(const Measure1& mu) { return static_cast<double>(mu.max_weight()) / static_cast<double>(mu.total()); }

struct AtomlessnessReport {
  std::vector<double> xs, thetas;
  std::vector<int> levels;                           // ascending
  std::vector<std::vector<std::vector<double>>> mass;  // mass[i][j][k] at levels[k]
  bool monotone = true;
  double headline = 0.0;  // max over the grid at the finest level
};

inline AtomlessnessReport atomlessness_probe(const SystemParams& p, const std::vector<double>& xs, const std::vector<double>& thetas,
                                             std::vector<int> levels, const FiberBuild& opt) {
  if (levels.empty() || xs.empty() || thetas.empty()) throw Error("atomlessness probe needs non-empty grids");
  std::sort(levels.begin(), levels.end());
  AtomlessnessReport r;
  r.xs = xs;
  r.thetas = thetas;
  r.levels = levels;
  const int top = levels.back();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FiberBuild o = opt;
    o.seed = mix_seed(opt.seed, i);
    Measure2 mu = build_fiber(p, xs[i], top, o);
    std::vector<std::vector<double>> row(thetas.size());
    parallel_blocks(thetas.size(), resolve_threads(opt.threads), [&](std::size_t j) {
      Measure1 pm = project_measure(mu, thetas[j]);
      for (int n : levels) row[j].push_back(max_cell_mass(pm.coarsen(n)));
    });
    for (auto& v : row) {
      for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[k - 1]) r.monotone = false;
      r.headline = std::max(r.headline, v.back());
    }
    r.mass.push_back(std::move(row));
  }
  return r;
}

// Upper bound for the mass within delta2 b^-n of the level-n grid lines,
// counting every level-L cell that meets the neighbourhood.
inline double boundary_mass(const Measure2& mu, int n, double delta2) {
  const int L = mu.level();
  if (n > L) throw Error("boundary mass needs n <= measure level");
  const std::int64_t s = ipow(mu.base(), L - n);
  if (delta2 * static_cast<double>(s) < 1.0) throw Error("neighbourhood thinner than resolution");
  const double reach = delta2 * static_cast<double>(s);
  auto near = [&](std::int64_t k) {
    std::int64_t r = k - floor_div(k, s) * s;
    return static_cast<double>(std::min(r, s - r - 1)) <= reach;
  };
  std::uint64_t w = 0;
  for (const auto& e : mu.entries())
    if (near(e.cell[0]) || near(e.cell[1])) w += e.weight;
  return static_cast<double>(w) / static_cast<double>(mu.total());
}

struct BoundaryMassTable {
  double x = 0.0;
  int level = 0;
  std::vector<int> levels;
  std::vector<double> deltas;
  std::vector<std::vector<double>> mass;  // mass[n index][delta index]
};

inline BoundaryMassTable boundary_mass_probe(const SystemParams& p, double x, const std::vector<int>& levels, const std::vector<double>& deltas,
                                             int extra_levels, const FiberBuild& opt) {
  if (levels.empty() || deltas.empty()) throw Error("boundary probe needs levels and deltas");
  BoundaryMassTable t;
  t.x = x;
  t.levels = levels;
  t.deltas = deltas;
  t.level = *std::max_element(levels.begin(), levels.end()) + extra_levels;
  Measure2 mu = build_fiber(p, x, t.level, opt);
  for (int n : levels) {
    std::vector<double> row;
    for (double d : deltas) row.push_back(boundary_mass(mu, n, d));
    t.mass.push_back(row);
  }
  return t;
}

}  // namespace solenoid
