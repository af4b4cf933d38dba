// solenoid <experiment> --config FILE [--seed N] [--threads N] [--out DIR]
//
// Precedence: built-in defaults < config file < command-line flags.
// SOLENOID_THREADS is used when neither the file nor --threads sets a count.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "solenoid/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solenoidal attractor experiments"};
  std::string experiment, config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("experiment", experiment, "experiment name")->required()->check(CLI::IsMember(solenoid::experiment_names()));
  app.add_option("--config", config_path, "configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) throw solenoid::Error("cannot read config " + config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    solenoid::RunConfig cfg = solenoid::parse_config(ss.str());
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    if (cfg.has("experiment") && cfg.str("experiment", "") != experiment)
      throw solenoid::Error(cfg.where_key("experiment") + "config is for experiment " + cfg.str("experiment", ""));
    if (*seed_opt) cfg.set("seed", std::to_string(seed));
    if (*threads_opt) cfg.set("threads", std::to_string(threads));
    if (*out_opt) cfg.set("output_dir", out_dir);
    auto r = solenoid::run_experiment(cfg, experiment);
    if (!r.ok) {
      std::cout << experiment << " FAIL " << r.headline << '\n';
      return 1;
    }
    std::cout << experiment << " OK " << r.headline << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << experiment << ": error: " << e.what() << '\n';
    return 1;
  }
}
