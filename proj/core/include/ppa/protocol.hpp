#pragma once

#include "ppa/env.hpp"
#include "ppa/oracle.hpp"
#include "ppa/types.hpp"

namespace ppa {

// Runs the posted-price protocol for T rounds, binding the environment to a
// buyer strategy under the information-revelation rules: the strategy sees
// (mask, price) before deciding and the item only after a purchase.
//
// All randomness (item draws, price draws, strategy coins) derives from
// `seed` via independent streams, so identical inputs yield byte-identical
// transcripts. Adversarial price tables are materialized before the loop;
// `oracle`, when given, supplies the conditional values some adversarial
// generators need (a local one is built otherwise).
Transcript run_protocol(const EnvModel& env, BuyerStrategy& strategy, long T,
                        std::uint64_t seed, const Oracle* oracle = nullptr);

}  // namespace ppa
