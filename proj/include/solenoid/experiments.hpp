#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "solenoid/config.hpp"
#include "solenoid/conservation.hpp"
#include "solenoid/dimension.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/hypothesis.hpp"
#include "solenoid/rotation.hpp"

namespace solenoid {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"attractor",    "dim-table",      "fiber-entropy", "porosity",
                                                 "projection-sweep", "conservation", "condition-h", "separation",
                                                 "transversality",   "rotation",     "verify-suite"};
  return names;
}

struct ExperimentResult {
  std::string headline;
  std::vector<std::string> files;
  bool ok = true;  // false when an internal contract failed
};

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class ExperimentContext {
 public:
  ExperimentContext(const RunConfig& cfg, std::string experiment)
      : cfg_(cfg),
        name_(std::move(experiment)),
        sys_(cfg.system()),
        seed_(cfg.unsigned_integer("seed", 1)),
        threads_(static_cast<int>(cfg.integer("threads", 0))),
        dir_(cfg.str("output_dir", ".")),
        max_words_(cfg.unsigned_integer("max_words", 1u << 22)),
        max_points_(cfg.unsigned_integer("max_points", 60'000'000)) {}

  const RunConfig& cfg() const { return cfg_; }
  const SystemParams& sys() const { return sys_; }
  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }
  int threads() const { return threads_; }
  std::uint64_t max_words() const { return max_words_; }
  std::uint64_t max_points() const { return max_points_; }

  // Named sub-stream: adding experiments or modules never shifts the others.
  std::uint64_t stream(const std::string& module) const {
    Fnv1a h;
    h.update(name_ + "." + module);
    return mix_seed(seed_, h.digest());
  }

  // exhaustive while b^depth fits max_words, sampled with `count` words beyond.
  FiberBuild fiber_build(int level, const std::string& module = "fiber") const { return fiber_build(sys_, level, module); }

  FiberBuild fiber_build(const SystemParams& p, int level, const std::string& module) const {
    FiberBuild o;
    const std::string mode = cfg_.str("mode", "auto");
    o.depth = static_cast<int>(cfg_.integer("depth", 0));
    if (o.depth == 0) {
      // Deepest exhaustive enumeration the budget allows, never below certification.
      o.depth = min_certified_depth(p, level);
      if (mode != "sampled") {
        int d = 0;
        while (std::pow(static_cast<long double>(p.b()), d + 1) <= static_cast<long double>(max_words_)) ++d;
        o.depth = std::max(o.depth, d);
      }
    }
    o.threads = threads_;
    o.seed = stream(module);
    o.count = cfg_.unsigned_integer("count", 1u << 20);
    const long double words = std::pow(static_cast<long double>(p.b()), o.depth);
    if (mode == "exhaustive") {
      if (words > static_cast<long double>(max_words_)) throw Error("budget exceeded: b^depth exceeds max_words");
      o.mode = WordMode::exhaustive;
    } else if (mode == "sampled") {
      o.mode = WordMode::sampled;
    } else if (mode == "auto") {
      o.mode = words <= static_cast<long double>(max_words_) ? WordMode::exhaustive : WordMode::sampled;
    } else {
      throw Error(cfg_.where_key("mode") + "mode must be auto, exhaustive or sampled");
    }
    if (o.mode == WordMode::sampled && o.count > max_words_) throw Error("budget exceeded: count exceeds max_words");
    return o;
  }

  std::string header() const { return "# config_hash=" + hex64(cfg_.hash()) + " seed=" + std::to_string(seed_) + "\n"; }

  std::string write(const std::string& ext, const std::string& body) {
    std::filesystem::create_directories(dir_);
    auto path = (std::filesystem::path(dir_) / (name_ + "-" + std::to_string(seed_) + "." + ext)).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << header() << body;
    if (!f) throw Error("write failed: " + path);
    files_.push_back(path);
    return path;
  }

  std::vector<std::string> files() const { return files_; }

 private:
  const RunConfig& cfg_;
  std::string name_;
  SystemParams sys_;
  std::uint64_t seed_;
  int threads_;
  std::string dir_;
  std::uint64_t max_words_, max_points_;
  std::vector<std::string> files_;
};

namespace experiments {

inline std::ostringstream csv() {
  std::ostringstream o;
  o << std::setprecision(12);
  return o;
}

inline ExperimentResult attractor(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const int lo = static_cast<int>(c.integer("box_lo", 0)), hi = static_cast<int>(c.integer("box_hi", 8));
  AttractorSpec s;
  s.mode = c.str("attractor_mode", "words") == "orbit" ? AttractorSpec::Mode::orbit : AttractorSpec::Mode::words;
  if (c.has("attractor_mode") && c.str("attractor_mode", "") != "orbit" && c.str("attractor_mode", "") != "words")
    throw Error(c.where_key("attractor_mode") + "attractor_mode must be words or orbit");
  s.x_count = c.unsigned_integer("x_count", 2048);
  s.depth = static_cast<int>(c.integer("depth", min_certified_depth(p, hi)));
  s.words_per_x = c.unsigned_integer("words_per_x", 1024);
  s.burn_in = c.unsigned_integer("burn_in", 200);
  s.jitter = c.boolean("jitter", false);
  s.seed = ctx.stream("attractor");
  s.max_points = ctx.max_points();
  auto levels = level_range(lo, hi);
  auto counts = attractor_box_counts(p, s, levels, ctx.threads());
  const std::uint64_t points = detail::attractor_points_per_x(p, s) * s.x_count;
  auto bd = box_dimension_from_counts(p, levels, counts, points);
  auto o = csv();
  o << "level,count\n";
  for (std::size_t i = 0; i < levels.size(); ++i) o << levels[i] << ',' << counts[i] << '\n';
  ctx.write("csv", o.str());
  if (c.boolean("write_points", false)) {
    auto cloud = generate_attractor(p, s, ctx.threads());
    auto q = csv();
    q << "x,re,im\n";
    for (const auto& pt : cloud.points) q << pt.x << ',' << pt.y.real() << ',' << pt.y.imag() << '\n';
    ctx.write("points.csv", q.str());
  }
  return {"boxdim=" + fmt(bd.verdict.estimated, 3) + " predicted=" + fmt(bd.verdict.predicted, 3), ctx.files(), true};
}

inline ExperimentResult dim_table(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& base = ctx.sys();
  auto gammas = c.reals("gamma_list", {0.3, 0.5, 0.7});
  const std::string method = c.str("method", "entropy");
  if (method != "entropy" && method != "box") throw Error(c.where_key("method") + "method must be entropy or box");
  auto xs = c.reals("xs", {0.1, 0.35, 0.6, 0.85});
  const int n_hi = static_cast<int>(c.integer("n_hi", 10));
  auto o = csv();
  o << "gamma_abs,delta,predicted,estimated,method\n";
  double worst = 0.0;
  for (double g : gammas) {
    SystemParams p(base.b(), g, base.delta(), base.phi(), base.delta_kind());
    double pred, est;
    std::string m;
    if (method == "entropy") {
      FiberBuild opt = ctx.fiber_build(p, n_hi, "fiber");
      auto fd = fiber_dimension(p, xs, static_cast<int>(c.integer("n_lo", 0)), n_hi, opt);
      pred = predicted_attractor_dimension(p.b(), g);
      est = 1.0 + fd.verdict.estimated;
      m = "entropy-slope";
    } else {
      AttractorSpec s;
      s.x_count = c.unsigned_integer("x_count", 2048);
      s.depth = min_certified_depth(p, static_cast<int>(c.integer("box_hi", 8)));
      s.words_per_x = c.unsigned_integer("words_per_x", 1024);
      s.seed = ctx.stream("attractor");
      s.max_points = ctx.max_points();
      auto levels = level_range(static_cast<int>(c.integer("box_lo", 0)), static_cast<int>(c.integer("box_hi", 8)));
      auto counts = attractor_box_counts(p, s, levels, ctx.threads());
      auto bd = box_dimension_from_counts(p, levels, counts, detail::attractor_points_per_x(p, s) * s.x_count);
      pred = bd.verdict.predicted;
      est = bd.verdict.estimated;
      m = "box-count";
    }
    worst = std::max(worst, std::abs(est - pred));
    o << g << ',' << p.delta() << ',' << pred << ',' << est << ',' << m << '\n';
  }
  ctx.write("csv", o.str());
  return {"rows=" + std::to_string(gammas.size()) + " max_error=" + fmt(worst, 3), ctx.files(), true};
}

inline ExperimentResult fiber_entropy(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const double x = c.real("x", 0.0);
  const int n_lo = static_cast<int>(c.integer("n_lo", 0)), n_hi = static_cast<int>(c.integer("n_hi", 10));
  Measure2 mu = build_fiber(p, x, n_hi, ctx.fiber_build(n_hi));
  ctx.write("measure", mu.dump_string());
  auto prof = entropy_profile(mu, n_lo, n_hi);
  auto o = csv();
  o << "level,entropy,normalized,occupied\n";
  for (const auto& pt : prof.points) o << pt.level << ',' << pt.entropy << ',' << pt.normalized << ',' << pt.occupied << '\n';
  ctx.write("csv", o.str());
  return {"alpha=" + fmt(std::max(0.0, prof.slope)) + " window=" + std::to_string(prof.window_lo) + ".." + std::to_string(prof.window_hi),
          ctx.files(), true};
}

inline ExperimentResult porosity(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const double x = c.real("x", 0.0);
  const int n1 = static_cast<int>(c.integer("n1", 1)), n2 = static_cast<int>(c.integer("n2", 8)), m = static_cast<int>(c.integer("m", 4));
  const int level = std::max(n2 + m, static_cast<int>(c.integer("n_hi", 0)));
  Measure2 mu = build_fiber(p, x, level, ctx.fiber_build(level));
  const double h = c.has("h") ? c.real("h", 0.0) : std::max(0.0, entropy_profile(mu, 0, level).slope);
  auto r = porosity_check(mu, h, c.real("porosity_delta", 0.2), m, n1, n2);
  auto o = csv();
  o << "h,delta,m,n1,n2,fraction,mean_component_entropy,verdict\n";
  o << r.h << ',' << r.delta << ',' << r.m << ',' << r.n1 << ',' << r.n2 << ',' << r.fraction << ',' << r.mean_component_entropy << ','
    << (r.verdict ? "true" : "false") << '\n';
  ctx.write("csv", o.str());
  return {"fraction=" + fmt(r.fraction, 3) + " verdict=" + (r.verdict ? "true" : "false"), ctx.files(), true};
}

inline ExperimentResult projection_sweep(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const int n = static_cast<int>(c.integer("n", 10));
  auto xs = c.reals("xs", default_theta_grid(16));
  auto thetas = c.reals("thetas", default_theta_grid(32));
  auto s = projection_entropy_sweep(ctx.sys(), xs, thetas, n, ctx.fiber_build(n));
  auto o = csv();
  o << "x,theta,normalized_entropy\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < thetas.size(); ++j) o << xs[i] << ',' << thetas[j] << ',' << s.values[i][j] << '\n';
  ctx.write("csv", o.str());
  return {"min=" + fmt(s.min) + " max=" + fmt(s.max) + " spread=" + fmt(s.max - s.min), ctx.files(), true};
}

// (x, theta) pairs: zipped lists when both are given, else a seeded sample.
inline std::vector<std::pair<double, double>> xtheta_pairs(const ExperimentContext& ctx, std::size_t def_count) {
  const auto& c = ctx.cfg();
  std::vector<std::pair<double, double>> out;
  if (c.has("xs") || c.has("thetas")) {
    auto xs = c.reals("xs", {c.real("x", 0.0)});
    auto ts = c.reals("thetas", {c.real("theta", 0.0)});
    if (xs.size() != ts.size() && xs.size() != 1 && ts.size() != 1) throw Error(c.where_key("thetas") + "xs and thetas must have equal length");
    std::size_t n = std::max(xs.size(), ts.size());
    for (std::size_t i = 0; i < n; ++i) out.push_back({xs[xs.size() == 1 ? 0 : i], ts[ts.size() == 1 ? 0 : i]});
    return out;
  }
  if (c.has("x") || c.has("theta")) return {{c.real("x", 0.0), c.real("theta", 0.0)}};
  SplitMix64 rng(ctx.stream("pairs"));
  for (std::size_t i = 0; i < def_count; ++i) {
    double x = rng.uniform();
    out.push_back({x, rng.uniform()});
  }
  return out;
}

inline ExperimentResult conservation(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const int n = static_cast<int>(c.integer("n", 10));
  auto qs = c.ints("q_list", {static_cast<int>(c.integer("q", 5))});
  auto pairs = xtheta_pairs(ctx, 8);
  auto o = csv();
  o << "x,theta,n,q,alpha_hat,alpha_at_level,beta_hat,upsilon_hat,residual,corollary_consistent\n";
  std::map<int, double> mean_res;
  bool fired = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    FiberBuild opt = ctx.fiber_build(n);
    opt.seed = mix_seed(opt.seed, i);
    Measure2 mu = build_fiber(p, pairs[i].first, n, opt);
    for (int q : qs) {
      auto e = conservation_estimate(mu, pairs[i].second, n, q);
      o << pairs[i].first << ',' << pairs[i].second << ',' << n << ',' << q << ',' << e.alpha_hat << ',' << e.alpha_at_level << ',' << e.beta_hat
        << ',' << e.upsilon_hat << ',' << e.residual << ',' << (e.corollary_consistent ? "true" : "false") << '\n';
      mean_res[q] += e.residual / static_cast<double>(pairs.size());
      fired = fired || !e.corollary_consistent;
    }
  }
  ctx.write("csv", o.str());
  std::string head = "residual=" + fmt(mean_res[qs.front()]) + " q=" + std::to_string(qs.front());
  if (fired) head += " corollary=fired";
  return {head, ctx.files(), true};
}

inline int default_h_depth(int b, std::uint64_t budget) {
  int d = 1;
  while (d < 12) {
    long double w = std::pow(static_cast<long double>(b), d + 1);
    if (w * w * (b - 1) / b / 2 > static_cast<long double>(budget)) break;
    ++d;
  }
  return d;
}

inline ExperimentResult condition_h(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const std::uint64_t budget = c.unsigned_integer("pair_budget", 1ULL << 26);
  const int depth = static_cast<int>(c.integer("h_depth", default_h_depth(p.b(), budget)));
  auto grid = [](std::int64_t n) {
    std::vector<double> g;
    for (std::int64_t i = 0; i < n; ++i) g.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return g;
  };
  auto r = condition_h_probe(p, budget, depth, grid(c.integer("x_grid", 16)), default_theta_grid(static_cast<int>(c.integer("theta_grid", 8))),
                             ctx.threads());
  std::ostringstream o;
  o << std::setprecision(12);
  o << "verdict " << r.verdict() << "\n";
  o << "depth " << r.depth << "\npairs " << r.pairs << "\nnoise " << r.noise << "\nmin_sup " << r.min_sup << "\nmin_projected " << r.min_projected
    << "\n";
  o << "argmin " << r.argmin.i.str(p.b()) << ' ' << r.argmin.j.str(p.b()) << "\n";
  o << "candidates " << r.candidate_count << "\n";
  for (const auto& cand : r.candidates) o << "candidate " << cand.i.str(p.b()) << ' ' << cand.j.str(p.b()) << ' ' << cand.sup << "\n";
  ctx.write("txt", o.str());
  return {"verdict=\"" + r.verdict() + "\" min_sup=" + fmt(r.min_sup, 6), ctx.files(), true};
}

inline ExperimentResult separation(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  Word w = Word::parse(c.str("suffix", "01"));
  const double eps0 = c.has("eps0") ? c.real("eps0", 0.0) : std::pow(p.gamma_abs(), c.real("eps_c", 3.0) / 2.0);
  std::vector<int> ns = c.ints("n_list", level_range(6, 14));
  auto cert = exponential_separation_test(p, c.real("x", 0.0), w, eps0, ns, c.unsigned_integer("max_points", 1ULL << 22), ctx.stream("sample"));
  ctx.write("sepcert", cert.str());
  return {"passing=" + std::to_string(cert.passing_levels().size()) + "/" + std::to_string(ns.size()) + " eps0=" + fmt(eps0, 6), ctx.files(), true};
}

inline ExperimentResult transversality(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const int grid = static_cast<int>(c.integer("z_grid", 16));
  auto w = transversality_search(p, static_cast<int>(c.integer("t_min", 1)), static_cast<int>(c.integer("t_max", 7)), grid, ctx.threads());
  ctx.write("transwit", w.str(p.b()) + "\n");
  if (!w.found) return {"witness=none", ctx.files(), true};
  auto chk = verify_transversality(p, w, 10 * grid, static_cast<int>(c.integer("sample_depth", 30)), static_cast<int>(c.integer("samples", 64)),
                                   ctx.stream("verify"));
  return {"t=" + std::to_string(w.t) + " xi1=" + fmt(w.xi1, 6) + " reverified=" + (chk.ok() ? "true" : "false"), ctx.files(), chk.ok()};
}

inline ExperimentResult rotation(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const double th0 = c.real("theta0", 0.0);
  auto orbit = rotation_orbit(p, th0, c.unsigned_integer("orbit_n", 100000));
  const int ell = static_cast<int>(c.integer("ell", 6));
  const std::uint64_t k_max = c.unsigned_integer("k_max", 256);
  FiberBuild opt = ctx.fiber_build(std::max(1, scale_tilde(p, ell)));
  opt.depth = 0;
  if (c.has("depth")) opt.depth = static_cast<int>(c.integer("depth", 0));
  auto r = birkhoff_average(p, ell, th0, k_max, static_cast<int>(c.integer("quad", 256)), opt, ctx.max_words());
  ctx.write("csv", r.csv());
  return {"discrepancy=" + fmt(orbit.discrepancy, 6) + " gap=" + fmt(r.gap_at(k_max), 6), ctx.files(), true};
}

// Identity checks, fiber entropy slope and box dimension in one pass.
inline ExperimentResult verify_suite(ExperimentContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& p = ctx.sys();
  const int b = p.b();
  SplitMix64 rng(ctx.stream("identities"));
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto word = [&](int len) {
      std::vector<int> s(static_cast<std::size_t>(len));
      for (auto& d : s) d = static_cast<int>(rng.below(static_cast<std::uint64_t>(b)));
      return Word(s);
    };
    double x = rng.uniform();
    Word w = word(1 + static_cast<int>(rng.below(6))), i = word(1 + static_cast<int>(rng.below(10))), j = word(1 + static_cast<int>(rng.below(10)));
    worst = std::max({worst, cocycle_check(p, x, w, i), difference_check(p, x, w, i, j)});
  }
  const bool identities = worst < 1e-10;

  const int n_hi = static_cast<int>(c.integer("n_hi", 10));
  auto fd = fiber_dimension(p, c.reals("xs", {0.1, 0.6}), 0, n_hi, ctx.fiber_build(n_hi));

  const int lo = static_cast<int>(c.integer("box_lo", 2)), hi = static_cast<int>(c.integer("box_hi", 10));
  AttractorSpec s;
  s.x_count = c.unsigned_integer("x_count", static_cast<std::uint64_t>(ipow(b, hi + 1)));
  s.depth = min_certified_depth(p, hi);
  s.words_per_x = c.unsigned_integer("words_per_x", 16);
  s.seed = ctx.stream("attractor");
  s.max_points = ctx.max_points();
  auto levels = level_range(lo, hi);
  auto counts = attractor_box_counts(p, s, levels, ctx.threads());
  auto bd = box_dimension_from_counts(p, levels, counts, detail::attractor_points_per_x(p, s) * s.x_count);

  auto h = condition_h_probe(p, 1ULL << 24, std::min(6, default_h_depth(b, 1ULL << 24)), {0.0625, 0.3125, 0.5625, 0.8125}, {});

  std::ostringstream o;
  o << std::setprecision(12);
  o << "identity_residual " << worst << (identities ? " ok" : " FAIL") << "\n";
  o << "alpha_hat " << fd.verdict.estimated << " predicted " << fd.verdict.predicted << "\n";
  o << "box_dimension " << bd.verdict.estimated << " fit " << bd.fit_lo << ".." << bd.fit_hi << "\n";
  o << "condition_h " << h.verdict() << " min_sup " << h.min_sup << "\n";
  ctx.write("txt", o.str());
  return {"alpha=" + fmt(fd.verdict.estimated, 3) + " dim=" + fmt(bd.verdict.estimated, 3), ctx.files(), identities};
}

}  // namespace experiments

inline ExperimentResult run_experiment(const RunConfig& cfg, const std::string& name) {
  static const std::map<std::string, std::function<ExperimentResult(ExperimentContext&)>> table = {
      {"attractor", experiments::attractor},
      {"dim-table", experiments::dim_table},
      {"fiber-entropy", experiments::fiber_entropy},
      {"porosity", experiments::porosity},
      {"projection-sweep", experiments::projection_sweep},
      {"conservation", experiments::conservation},
      {"condition-h", experiments::condition_h},
      {"separation", experiments::separation},
      {"transversality", experiments::transversality},
      {"rotation", experiments::rotation},
      {"verify-suite", experiments::verify_suite},
  };
  auto it = table.find(name);
  if (it == table.end()) throw Error("unknown experiment " + name);
  ExperimentContext ctx(cfg, name);
  return it->second(ctx);
}

}  // namespace solenoid
