#include "ppa/oracle.hpp"

#include <cmath>

namespace ppa {

Oracle::Oracle(const EnvModel& env, long n_samples, std::uint64_t mc_seed)
    : env_(&env), n_samples_(n_samples), mc_seed_(mc_seed) {}

void Oracle::build() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (built_) return;
  const int n = env_->n_mask();
  table_.assign(n, Cell{});

  if (env_->is_finite()) {
    const auto& f = env_->finite();
    std::vector<double> wsum(n, 0.0);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      int k = f.mask_of[i] - 1;
      table_[k].mass += f.probs[i];
      wsum[k] += f.probs[i] * f.values[i];
    }
    for (int k = 0; k < n; ++k)
      if (table_[k].mass > 0.0) table_[k].value = wsum[k] / table_[k].mass;
  } else {
    // One shared sample pass, grouped by sign pattern.
    Rng rng = make_rng(mc_seed_, Stream::oracle);
    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    std::vector<long> count(n, 0);
    for (long s = 0; s < n_samples_; ++s) {
      Item it = env_->sample_item(rng);
      int k = env_->mask_value(it).key();
      double v = env_->value_of(it);
      sum[k] += v;
      sumsq[k] += v * v;
      ++count[k];
    }
    for (int k = 0; k < n; ++k) {
      if (count[k] == 0) continue;
      table_[k].mass = static_cast<double>(count[k]) / static_cast<double>(n_samples_);
      table_[k].value = sum[k] / count[k];
      if (count[k] > 1) {
        double var = (sumsq[k] - sum[k] * sum[k] / count[k]) / (count[k] - 1);
        table_[k].stderr_ = std::sqrt(std::max(0.0, var) / count[k]);
      }
    }
  }
  built_ = true;
}

const Oracle::Cell& Oracle::cell(int key) const {
  if (!built_) build();
  if (key < 0 || key >= static_cast<int>(table_.size()))
    throw std::invalid_argument("Oracle: mask key out of range");
  return table_[key];
}

double Oracle::conditional_value(const MaskValue& mask) const {
  const Cell& c = cell(mask.key());
  if (c.mass <= 0.0) throw no_mass_error("Oracle: mask value has zero mass");
  return c.value;
}

double Oracle::conditional_value_stderr(const MaskValue& mask) const {
  return cell(mask.key()).stderr_;
}

double Oracle::mask_mass(const MaskValue& mask) const { return cell(mask.key()).mass; }

std::vector<double> Oracle::all_conditional_values() const {
  if (!built_) build();
  std::vector<double> out(table_.size());
  for (std::size_t k = 0; k < table_.size(); ++k) out[k] = table_[k].value;
  return out;
}

RegretLedger Oracle::regret(const Transcript& transcript) const {
  if (transcript.true_items.size() != transcript.records.size())
    throw std::invalid_argument("regret: transcript lacks the ground-truth item channel");

  RegretLedger ledger;
  ledger.oracle_decisions.reserve(transcript.records.size());
  ledger.contributions.reserve(transcript.records.size());
  ledger.cumulative.reserve(transcript.records.size());

  double cum = 0.0;
  for (std::size_t r = 0; r < transcript.records.size(); ++r) {
    const RoundRecord& rec = transcript.records[r];
    const Item& item = transcript.true_items[r];
    if (!(env_->mask_value(item) == rec.mask))
      throw std::invalid_argument("regret: transcript does not match this environment");
    double v = env_->value_of(item);
    int star = decide(rec.mask, rec.price);
    double contribution = (v - rec.price) * static_cast<double>(star - rec.decision);
    cum += contribution;
    ledger.oracle_decisions.push_back(star);
    ledger.contributions.push_back(contribution);
    ledger.cumulative.push_back(cum);
  }
  return ledger;
}

}  // namespace ppa
