#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ppa/experiment.hpp"
#include "ppa/exp4vc.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 int parallelism, std::uint64_t seed_base) {
  ppa::ExperimentConfig config;
  try {
    config = ppa::config_from_json(read_file(config_path));
  } catch (const ppa::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    ppa::RegretSeries series =
        ppa::run_experiment(config, out_dir, parallelism, seed_base);
    for (const auto& a : series.aggregates)
      std::printf("T=%-8ld mean_regret=%-12.4f stderr=%.4f (%d replicates)\n",
                  a.T, a.mean_regret, a.stderr_, a.replicates);
    std::printf("wrote %s/summary.csv%s\n", out_dir.c_str(),
                config.write_rounds ? " and rounds.csv" : "");
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int cmd_fit(const std::string& summary_path) {
  try {
    auto aggregates = ppa::read_summary_csv(summary_path);
    ppa::ExponentFit fit = ppa::fit_regret_exponent(aggregates);
    std::string plot_path =
        std::filesystem::path(summary_path).replace_extension(".dat").string();
    ppa::write_plot_data(aggregates, fit, plot_path);
    std::printf("slope     %.4f\n", fit.slope);
    std::printf("intercept %.4f\n", fit.intercept);
    std::printf("r2        %.6f\n", fit.r2);
    std::printf("points    %d used, %d excluded (non-positive mean)\n",
                fit.used_points, fit.excluded_points);
    std::printf("plot data %s\n", plot_path.c_str());
  } catch (const ppa::insufficient_data_error& e) {
    std::cerr << "insufficient data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

bool selftest_equivalence() {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 1 + static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> up(0.01, 1.0);
    std::vector<std::pair<int, double>> obs;
    for (int i = 1; i <= n; ++i) {
      int prices = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < prices; ++k) obs.emplace_back(i, up(rng));
    }
    ppa::PolicyGrid grid = ppa::build_policy_grid(n, 1.0, obs);
    ppa::BucketAccumulators acc(grid);
    ppa::NaiveExp4 naive(grid);
    double gamma = 0.1, bonus = 0.05;
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
      int i_t = static_cast<int>(rng() % n);
      double p = up(rng);
      int j_t = ppa::locate_bucket(grid, i_t, p);
      ppa::MixtureProbs fast = ppa::mixture_probs(grid, acc, i_t, j_t, gamma);
      ppa::MixtureProbs slow = naive.mixture(i_t, j_t, gamma);
      for (int b = 0; b < 2; ++b)
        if (std::abs(fast[b] - slow[b]) > 1e-9) return false;
      int arm = ur(rng) < fast[1] ? 1 : 0;
      double reward = ur(rng);
      ppa::update_accumulators(acc, i_t, j_t, arm, reward, fast, gamma, bonus);
      naive.update(i_t, j_t, arm, reward, fast, gamma, bonus);
    }
  }
  return true;
}

bool selftest_determinism() {
  const char* cfg = R"({
    "env": {"type": "finite", "H": 1.0,
            "values": [0.9, 0.2, 0.6], "probs": [0.4, 0.3, 0.3],
            "mask": [1, 1, 2],
            "prices": {"kind": "stochastic",
                       "per_mask": [{"dist": "uniform", "lo": 0.0, "hi": 1.0}]}},
    "strategy": {"id": "etc-finite", "c": 0.05},
    "horizons": [200, 400, 800, 1600],
    "replicates": 3
  })";
  auto config = ppa::config_from_json(cfg);
  auto tmp = std::filesystem::temp_directory_path() / "ppa-selftest";
  std::filesystem::remove_all(tmp);
  ppa::run_experiment(config, (tmp / "a").string(), 2, 99);
  ppa::run_experiment(config, (tmp / "b").string(), 1, 99);
  bool same =
      read_file((tmp / "a" / "summary.csv").string()) ==
          read_file((tmp / "b" / "summary.csv").string()) &&
      read_file((tmp / "a" / "rounds.csv").string()) ==
          read_file((tmp / "b" / "rounds.csv").string());
  std::filesystem::remove_all(tmp);
  return same;
}

bool selftest_fit() {
  std::vector<ppa::RegretAggregate> series;
  for (long T : {100L, 1000L, 10000L, 100000L})
    series.push_back({T, std::sqrt(static_cast<double>(T)), 0.0, 1});
  ppa::ExponentFit fit = ppa::fit_regret_exponent(series);
  return std::abs(fit.slope - 0.5) < 1e-12 && fit.r2 > 1.0 - 1e-12;
}

int cmd_selftest() {
  struct Check {
    const char* name;
    bool (*fn)();
  } checks[] = {
      {"bucketized/naive mixture equivalence", selftest_equivalence},
      {"experiment determinism across parallelism", selftest_determinism},
      {"power-law exponent fit", selftest_fit},
  };
  bool all_ok = true;
  for (const auto& check : checks) {
    bool ok = false;
    try {
      ok = check.fn();
    } catch (const std::exception& e) {
      std::printf("[FAIL] %s (%s)\n", check.name, e.what());
      all_ok = false;
      continue;
    }
    std::printf("[%s] %s\n", ok ? " OK " : "FAIL", check.name);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partially-informed posted-price auction simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", summary_path;
  int parallelism = 1;
  std::uint64_t seed_base = 1;

  auto* simulate = app.add_subcommand("simulate", "Run a regret experiment");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--parallelism", parallelism, "Worker threads");
  simulate->add_option("--seed-base", seed_base, "Base seed for replicate runs");

  auto* fit = app.add_subcommand("fit", "Fit a log-log regret exponent");
  fit->add_option("--summary", summary_path, "summary.csv from simulate")
      ->required();

  app.add_subcommand("selftest", "Run built-in equivalence and invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (simulate->parsed())
    return cmd_simulate(config_path, out_dir, parallelism, seed_base);
  if (fit->parsed()) return cmd_fit(summary_path);
  return cmd_selftest();
}
