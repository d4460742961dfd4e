#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <vector>

#include "ppa/env.hpp"
#include "ppa/types.hpp"

namespace ppa {

// Exploration length: ceil(c * sqrt(4 T d l ln(l/delta))), capped at
// floor(T/2).
long exploration_length(long T, int d, int l, double delta, double c = 1.0);

// Recovers separators from realizable (point, sign pattern) samples: for
// every bit j, finds w_j with sigma_i (w_j . x_i) >= 1 where sigma_i = +1
// for bit 1 and -1 for bit 0. The result re-hashes every training point to
// its observed pattern exactly; an inseparable system (impossible for data
// generated by a true separator set) throws realizability_error.
Separators recover_separators(
    const std::vector<std::pair<std::vector<double>, MaskValue>>& samples, int d,
    int l);

// The preimage of a sign pattern under a separator set, intersected with the
// unit box. Membership is exact.
class PolytopeRegion {
 public:
  PolytopeRegion(const Separators& sep, std::vector<std::uint8_t> pattern);
  bool contains(const std::vector<double>& x) const;
  const std::vector<std::uint8_t>& pattern() const { return pattern_; }

 private:
  const Separators* sep_;
  std::vector<std::uint8_t> pattern_;
};

struct RegionEstimate {
  double value = 0.0;
  double stderr_ = 0.0;       // bootstrap standard error
  double sample_variance = 0.0;  // advisory spread diagnostic
  long accepted = 0;
  bool low_mass = false;  // fewer than 50 accepted samples
};

// Monte-Carlo estimate of E[v*(x) | x in region] by rejection sampling from
// the environment's item density. Zero accepted samples throw no_mass_error.
RegionEstimate estimate_region_mean(const EnvModel& env,
                                    const PolytopeRegion& region, long n_samples,
                                    std::uint64_t seed);

// Same estimator over an arbitrary membership predicate (convex or not; the
// estimator itself only needs rejection sampling).
RegionEstimate estimate_region_mean(
    const EnvModel& env,
    const std::function<bool(const std::vector<double>&)>& contains,
    long n_samples, std::uint64_t seed);

// Explore-then-commit with a known item distribution and SimHash masks:
// buys unconditionally for t' rounds while recording (item, pattern) pairs,
// recovers separators, then prices each observed pattern by its cached
// region-mean estimate.
class EtcSimhashStrategy final : public BuyerStrategy {
 public:
  struct Params {
    double delta = 0.1;
    double c = 1.0;
    long n_samples = 50000;
    long t_prime_override = 0;
    bool use_true_separators = false;  // test hook: skip recovery
  };

  EtcSimhashStrategy();
  explicit EtcSimhashStrategy(Params params);

  void start(const EnvView& env, long horizon, std::uint64_t seed) override;
  int decide(const MaskValue& mask, double price) override;
  void feedback(const std::optional<Item>& purchased, double utility) override;
  std::string name() const override { return "etc-simhash"; }

  long t_prime() const { return t_prime_; }
  const Separators& recovered_separators() const { return w_hat_; }
  long no_mass_rounds() const { return no_mass_rounds_; }
  long estimation_calls() const { return estimation_calls_; }
  const std::map<int, RegionEstimate>& estimate_cache() const { return cache_; }

  // Pre-seeds the per-pattern cache (used by tests to supply exact means).
  void inject_estimate(int pattern_key, RegionEstimate estimate);

  // Writes the recovered separators and cached per-pattern estimates.
  void dump_state(std::ostream& os) const;

 private:
  double cached_zhat(const MaskValue& mask);

  Params params_;
  const EnvModel* env_ = nullptr;
  long T_ = 0;
  long t_prime_ = 0;
  long round_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::vector<double>, MaskValue>> samples_;
  MaskValue pending_mask_;
  bool exploring_ = false;
  bool committed_ = false;
  Separators w_hat_;
  std::map<int, RegionEstimate> cache_;
  std::map<int, bool> no_mass_;
  long no_mass_rounds_ = 0;
  long estimation_calls_ = 0;
};

// Unknown-horizon wrapper: runs fresh explore-then-commit instances over
// epochs of length 2*T0, 4*T0, 8*T0, ... with no state carried across
// epochs; the final epoch is truncated by the budget.
class DoublingSimhashStrategy final : public BuyerStrategy {
 public:
  struct Params {
    long T0 = 8;
    EtcSimhashStrategy::Params inner;
  };

  DoublingSimhashStrategy();
  explicit DoublingSimhashStrategy(Params params);

  void start(const EnvView& env, long budget, std::uint64_t seed) override;
  int decide(const MaskValue& mask, double price) override;
  void feedback(const std::optional<Item>& purchased, double utility) override;
  std::string name() const override { return "etc-simhash-doubling"; }

  int epoch_index() const { return epoch_; }
  const EtcSimhashStrategy* current_instance() const { return inner_.get(); }

  // Epoch lengths for a given budget, final epoch truncated.
  static std::vector<long> epoch_lengths(long T0, long budget);

 private:
  void begin_epoch();

  Params params_;
  EnvView env_;
  std::uint64_t seed_ = 0;
  long budget_ = 0;
  long used_ = 0;
  long epoch_remaining_ = 0;
  int epoch_ = 0;
  std::unique_ptr<EtcSimhashStrategy> inner_;
};

class Oracle;

// Convenience runner for the doubling wrapper; returns the concatenated
// transcript over the whole budget.
Transcript doubling_runner(const EnvModel& env, long T0,
                           EtcSimhashStrategy::Params inner_params, long budget,
                           std::uint64_t seed, const Oracle* oracle = nullptr);

}  // namespace ppa
