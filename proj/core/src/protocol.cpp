#include "ppa/protocol.hpp"

#include <memory>

namespace ppa {

Transcript run_protocol(const EnvModel& env, BuyerStrategy& strategy, long T,
                        std::uint64_t seed, const Oracle* oracle) {
  if (T < 1) throw std::invalid_argument("run_protocol: horizon must be >= 1");

  Rng rng_items = make_rng(seed, Stream::items);
  Rng rng_prices = make_rng(seed, Stream::prices);

  // Oblivious adversaries: the whole (t, mask) -> price table exists before
  // the first buyer decision.
  std::vector<std::vector<double>> adv_table;
  const auto* adv = std::get_if<AdversarialPrices>(&env.prices);
  if (adv) {
    std::unique_ptr<Oracle> local;
    if (!oracle) {
      local = std::make_unique<Oracle>(env);
      oracle = local.get();
    }
    adv_table = materialize_adversarial_table(*adv, T, env.n_mask(), env.H,
                                              oracle->all_conditional_values());
  }
  const auto* stoch = std::get_if<StochasticPrices>(&env.prices);

  strategy.start(env.view(), T, derive_seed(seed, Stream::strategy));

  Transcript tr;
  tr.horizon = T;
  tr.seed = seed;
  tr.records.reserve(T);
  tr.true_items.reserve(T);

  for (long t = 1; t <= T; ++t) {
    Item item = env.sample_item(rng_items);
    MaskValue mask = env.mask_value(item);
    int key = mask.key();

    double price;
    if (adv) {
      price = adv_table[t - 1][key];
    } else {
      const PriceDist& dist =
          stoch->per_mask.size() == 1 ? stoch->per_mask[0] : stoch->per_mask[key];
      price = dist.sample(rng_prices);
    }

    int decision = strategy.decide(mask, price) ? 1 : 0;
    double utility = buyer_utility(env.value_of(item), price, decision);
    strategy.feedback(decision ? std::optional<Item>(item) : std::nullopt, utility);

    RoundRecord rec;
    rec.t = t;
    rec.mask = mask;
    rec.price = price;
    rec.decision = decision;
    rec.utility = utility;
    if (decision) rec.revealed_item = item;
    tr.records.push_back(std::move(rec));
    tr.true_items.push_back(std::move(item));
  }
  return tr;
}

}  // namespace ppa
