#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppa/env.hpp"
#include "ppa/oracle.hpp"
#include "ppa/types.hpp"

namespace ppa {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strategy knobs pooled across strategy types; each factory picks what it
// understands and ignores the rest.
struct StrategyConfig {
  std::string id;  // exp4vc | etc-finite | etc-simhash | etc-simhash-doubling
                   // | oracle | always-buy | never-buy | fixed-threshold
  double delta = 0.05;
  double c = 1.0;
  double eta_tilde = 0.0;
  long n_samples = 50000;
  long t_prime_override = 0;
  long T0 = 8;
  double threshold = 0.5;
};

struct ExperimentConfig {
  EnvModel env;
  StrategyConfig strategy;
  std::vector<long> horizons;  // strictly increasing
  int replicates = 1;
  bool write_rounds = true;

  static std::vector<long> default_horizons() {
    return {2000, 5000, 12000, 30000, 75000};
  }
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

struct RegretRow {
  long T = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double final_regret = 0.0;
};

struct RegretAggregate {
  long T = 0;
  double mean_regret = 0.0;
  double stderr_ = 0.0;
  int replicates = 0;
};

struct RegretSeries {
  std::vector<RegretRow> rows;             // sorted by (T, replicate)
  std::vector<RegretAggregate> aggregates; // sorted by T

  static std::vector<RegretAggregate> aggregate(const std::vector<RegretRow>& rows);
};

std::unique_ptr<BuyerStrategy> make_strategy(const StrategyConfig& config,
                                             const Oracle& oracle);

// Runs replicates x horizons cells, each a full protocol run with the seed
// derived from (seed_base, T, replicate). Writes summary.csv (and rounds.csv
// when configured) under out_dir; the written bytes depend only on the
// config and seed_base, not on parallelism.
RegretSeries run_experiment(const ExperimentConfig& config,
                            const std::string& out_dir, int parallelism = 1,
                            std::uint64_t seed_base = 1);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;  // of ln(regret) against ln(T)
  double r2 = 0.0;
  int used_points = 0;
  int excluded_points = 0;  // non-positive means dropped before the fit
};

// OLS on (ln T, ln mean_regret); needs at least 4 positive-mean points,
// otherwise throws insufficient_data_error.
ExponentFit fit_regret_exponent(const std::vector<RegretAggregate>& aggregates);

std::vector<RegretAggregate> read_summary_csv(const std::string& path);
void write_plot_data(const std::vector<RegretAggregate>& aggregates,
                     const ExponentFit& fit, const std::string& path);

}  // namespace ppa
