#pragma once

#include <cstdint>
#include <vector>

#include "ppa/rng.hpp"
#include "ppa/types.hpp"

namespace ppa {

// Empirical mask frequencies and value masses accumulated over the
// exploration phase; eta_hat[i] estimates Pr[h(x)=i] and v_hat[i] estimates
// E[v*(x) 1(h(x)=i)], both as running sums of 1/t' increments.
struct FrequencyEstimates {
  std::vector<double> eta_hat;
  std::vector<double> v_hat;
  long t_prime = 0;
  bool sealed = false;  // set once exploration completes

  explicit FrequencyEstimates(int n = 0, long t_prime_ = 0)
      : eta_hat(n, 0.0), v_hat(n, 0.0), t_prime(t_prime_) {}
};

// One exploration round: mask index i (0-based key) was observed with value
// v. Throws phase_error once the estimates are sealed.
void explore_update(FrequencyEstimates& est, int i, double v);

// Committed decision: Zhat = v_hat/eta_hat (0 if the index was never seen),
// buy iff Zhat >= p (non-strict, deliberately).
int exploit_decision(const FrequencyEstimates& est, int i, double p);

// Exploration lengths, both capped at floor(T/2). The multiplier c rescales
// the schedules at desk scale; c = 1 gives the plain formulas.
long schedule_unknown_eta(long T, int n, double c = 1.0);
long schedule_known_eta(long T, int n, double eta_tilde, double c = 1.0);

// Explore-then-commit under an unknown item distribution: buys every round
// of the exploration phase (even at clearly unprofitable prices), then
// commits to the per-mask threshold rule.
class EtcFiniteStrategy final : public BuyerStrategy {
 public:
  struct Params {
    double c = 0.05;
    double eta_tilde = 0.0;      // > 0 switches to the known-eta schedule
    long t_prime_override = 0;   // > 0 bypasses both schedules
  };

  EtcFiniteStrategy();
  explicit EtcFiniteStrategy(Params params);

  void start(const EnvView& env, long horizon, std::uint64_t seed) override;
  int decide(const MaskValue& mask, double price) override;
  void feedback(const std::optional<Item>& purchased, double utility) override;
  std::string name() const override { return "etc-finite"; }

  long t_prime() const { return est_.t_prime; }
  const FrequencyEstimates& estimates() const { return est_; }

 private:
  Params params_;
  double H_ = 1.0;
  long T_ = 0;
  long round_ = 0;
  FrequencyEstimates est_;
  int pending_key_ = -1;
  double pending_price_ = 0.0;
  bool pending_explore_ = false;
};

}  // namespace ppa
