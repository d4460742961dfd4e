#pragma once

#include <mutex>
#include <vector>

#include "ppa/env.hpp"
#include "ppa/types.hpp"

namespace ppa {

// Per-round regret accounting against the myopic oracle: the summand is
// (v*(x_t) - p_t) * (s*_t - s_t) evaluated on the realized item.
struct RegretLedger {
  std::vector<int> oracle_decisions;
  std::vector<double> contributions;
  std::vector<double> cumulative;

  double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// E[v*(x) | h(x) = y] and the mask-value masses, computed from ground-truth
// environment knowledge. Finite environments are exact; continuous ones use a
// fixed-seed Monte-Carlo estimate cached per mask value. Thread safe: the
// cache is built once under a mutex, reads afterwards are lock-free.
class Oracle {
 public:
  // Default sample count chosen so oracle error sits well below strategy
  // regret at desk scale.
  static constexpr long kDefaultSamples = 200000;

  explicit Oracle(const EnvModel& env, long n_samples = kDefaultSamples,
                  std::uint64_t mc_seed = 0x0a11ce);

  const EnvModel& env() const { return *env_; }

  // Throws no_mass_error for a mask value of zero (estimated) mass.
  double conditional_value(const MaskValue& mask) const;
  double conditional_value_stderr(const MaskValue& mask) const;
  double mask_mass(const MaskValue& mask) const;

  // Per mask key; zero-mass entries are 0 with mass 0.
  std::vector<double> all_conditional_values() const;

  static int decision(double cond_value, double price) {
    return cond_value > price ? 1 : 0;  // strict, deliberately
  }
  int decide(const MaskValue& mask, double price) const {
    return decision(conditional_value(mask), price);
  }

  // Transcript must have been produced under this environment (the
  // ground-truth item channel is checked against it).
  RegretLedger regret(const Transcript& transcript) const;

 private:
  struct Cell {
    double value = 0.0;
    double stderr_ = 0.0;
    double mass = 0.0;
  };
  const Cell& cell(int key) const;
  void build() const;

  const EnvModel* env_;
  long n_samples_;
  std::uint64_t mc_seed_;
  mutable std::mutex mu_;
  mutable bool built_ = false;
  mutable std::vector<Cell> table_;
};

}  // namespace ppa
