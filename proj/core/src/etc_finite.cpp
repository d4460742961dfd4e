#include "ppa/etc_finite.hpp"

#include <cmath>

namespace ppa {

void explore_update(FrequencyEstimates& est, int i, double v) {
  if (est.sealed)
    throw phase_error("explore_update: exploration phase already completed");
  if (i < 0 || i >= static_cast<int>(est.eta_hat.size()))
    throw std::invalid_argument("explore_update: mask index out of range");
  est.eta_hat[i] += 1.0 / static_cast<double>(est.t_prime);
  est.v_hat[i] += v / static_cast<double>(est.t_prime);
}

int exploit_decision(const FrequencyEstimates& est, int i, double p) {
  double zhat = est.eta_hat[i] > 0.0 ? est.v_hat[i] / est.eta_hat[i] : 0.0;
  return zhat >= p ? 1 : 0;
}

long schedule_unknown_eta(long T, int n, double c) {
  if (c <= 0.0) throw std::invalid_argument("schedule_unknown_eta: c must be positive");
  if (T < 1 || n < 1) throw std::invalid_argument("schedule_unknown_eta: T, n must be >= 1");
  double raw = c * std::pow(static_cast<double>(T), 0.75) * std::sqrt(static_cast<double>(n)) *
               std::log(4.0 * n * static_cast<double>(T));
  return std::min(static_cast<long>(std::ceil(raw)), T / 2);
}

long schedule_known_eta(long T, int n, double eta_tilde, double c) {
  if (eta_tilde <= 0.0)
    throw std::invalid_argument("schedule_known_eta: eta_tilde must be positive");
  if (c <= 0.0) throw std::invalid_argument("schedule_known_eta: c must be positive");
  double raw = c * 9.0 * std::pow(static_cast<double>(T), 2.0 / 3.0) / eta_tilde *
               std::log(4.0 * n * static_cast<double>(T));
  return std::min(static_cast<long>(std::ceil(raw)), T / 2);
}

EtcFiniteStrategy::EtcFiniteStrategy() : EtcFiniteStrategy(Params{}) {}

EtcFiniteStrategy::EtcFiniteStrategy(Params params) : params_(params) {}

void EtcFiniteStrategy::start(const EnvView& env, long horizon, std::uint64_t) {
  H_ = env.H;
  T_ = horizon;
  round_ = 0;
  long tp;
  if (params_.t_prime_override > 0)
    tp = std::min(params_.t_prime_override, T_ / 2);
  else if (params_.eta_tilde > 0.0)
    tp = schedule_known_eta(T_, env.n_mask, params_.eta_tilde, params_.c);
  else
    tp = schedule_unknown_eta(T_, env.n_mask, params_.c);
  tp = std::max(tp, 1L);
  est_ = FrequencyEstimates(env.n_mask, tp);
  pending_explore_ = false;
}

int EtcFiniteStrategy::decide(const MaskValue& mask, double price) {
  ++round_;
  if (round_ > T_) throw phase_error("EtcFiniteStrategy: called past the horizon");
  if (round_ <= est_.t_prime) {
    pending_key_ = mask.key();
    pending_price_ = price;
    pending_explore_ = true;
    return 1;
  }
  pending_explore_ = false;
  return exploit_decision(est_, mask.key(), price);
}

void EtcFiniteStrategy::feedback(const std::optional<Item>&, double utility) {
  if (!pending_explore_) return;
  // the purchase reveals the item, hence its value: u = v - p
  explore_update(est_, pending_key_, utility + pending_price_);
  pending_explore_ = false;
  if (round_ == est_.t_prime) est_.sealed = true;
}

}  // namespace ppa
