#include <doctest.h>

#include "ppa/baselines.hpp"
#include "ppa/env.hpp"
#include "ppa/oracle.hpp"
#include "ppa/protocol.hpp"

using namespace ppa;

namespace {

EnvModel env_with_masks(std::vector<double> values, std::vector<double> probs,
                        std::vector<int> mask_of) {
  return make_finite_env(std::move(values), std::move(probs), std::move(mask_of),
                         stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
}

}  // namespace

TEST_CASE("conditional value on a finite support") {
  SUBCASE("collapsed mask averages both items") {
    auto env = env_with_masks({0.2, 0.8}, {0.5, 0.5}, {1, 1});
    Oracle oracle(env);
    CHECK(oracle.conditional_value(MaskValue::from_index(1)) == doctest::Approx(0.5));
  }
  SUBCASE("singleton preimage returns the item value") {
    auto env = env_with_masks({0.2, 0.8}, {0.5, 0.5}, {1, 2});
    Oracle oracle(env);
    CHECK(oracle.conditional_value(MaskValue::from_index(1)) == doctest::Approx(0.2));
  }
  SUBCASE("weighted average over a mixed preimage") {
    auto env = env_with_masks({0.1, 0.5, 0.9}, {0.5, 0.25, 0.25}, {1, 1, 2});
    Oracle oracle(env);
    CHECK(oracle.conditional_value(MaskValue::from_index(1)) ==
          doctest::Approx((0.5 * 0.1 + 0.25 * 0.5) / 0.75));
  }
}

TEST_CASE("decision rule is a strict threshold") {
  CHECK(Oracle::decision(0.5, 0.4) == 1);
  CHECK(Oracle::decision(0.5, 0.5) == 0);
  CHECK(Oracle::decision(0.0, 0.0) == 0);
}

TEST_CASE("decision is nonincreasing in price") {
  int prev = 1;
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    int d = Oracle::decision(0.37, p);
    CHECK(d <= prev);
    prev = d;
  }
}

TEST_CASE("zero-mass mask value throws") {
  auto env = env_with_masks({0.2, 0.8}, {1.0, 0.0}, {1, 2});
  Oracle oracle(env);
  CHECK_THROWS_AS(oracle.conditional_value(MaskValue::from_index(2)), no_mass_error);
  CHECK(oracle.mask_mass(MaskValue::from_index(2)) == doctest::Approx(0.0));
}

TEST_CASE("mask masses sum to 1") {
  auto env = env_with_masks({0.1, 0.5, 0.9}, {0.5, 0.25, 0.25}, {1, 1, 2});
  Oracle oracle(env);
  double sum = oracle.mask_mass(MaskValue::from_index(1)) +
               oracle.mask_mass(MaskValue::from_index(2));
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("regret contributions follow the per-round summand") {
  // One mask with conditional value 0.5; items at 0.2 and 0.9 so realized
  // per-round regret can be negative even though its expectation is not.
  auto env = env_with_masks({0.2, 0.9}, {4.0 / 7.0, 3.0 / 7.0}, {1, 1});
  Oracle oracle(env);
  REQUIRE(oracle.conditional_value(MaskValue::from_index(1)) == doctest::Approx(0.5));

  Transcript tr;
  tr.horizon = 2;
  RoundRecord r1;
  r1.t = 1;
  r1.mask = MaskValue::from_index(1);
  r1.price = 0.3;
  r1.decision = 0;
  RoundRecord r2 = r1;
  r2.t = 2;
  tr.records = {r1, r2};
  tr.true_items = {Item::finite(0), Item::finite(1)};

  auto ledger = oracle.regret(tr);
  REQUIRE(ledger.contributions.size() == 2);
  CHECK(ledger.oracle_decisions[0] == 1);
  CHECK(ledger.contributions[0] == doctest::Approx(-0.1));
  CHECK(ledger.contributions[1] == doctest::Approx(0.6));
  CHECK(ledger.cumulative[1] == doctest::Approx(0.5));
}

TEST_CASE("matching the oracle gives zero regret") {
  auto env = env_with_masks({0.1, 0.5, 0.9, 0.3}, {0.25, 0.25, 0.25, 0.25},
                            {1, 2, 3, 4});
  Oracle oracle(env);
  OracleStrategy s(oracle);
  auto tr = run_protocol(env, s, 1000, 17, &oracle);
  auto ledger = oracle.regret(tr);
  CHECK(ledger.final_regret() == doctest::Approx(0.0));
}

TEST_CASE("regret requires the ground-truth item channel") {
  auto env = env_with_masks({0.2, 0.8}, {0.5, 0.5}, {1, 1});
  Oracle oracle(env);
  Transcript tr;
  tr.horizon = 1;
  RoundRecord r;
  r.t = 1;
  r.mask = MaskValue::from_index(1);
  tr.records = {r};
  CHECK_THROWS_AS(oracle.regret(tr), std::invalid_argument);
}

TEST_CASE("decisions are invariant to item relabeling") {
  auto env_a = env_with_masks({0.1, 0.5, 0.9}, {0.5, 0.25, 0.25}, {1, 1, 2});
  auto env_b = env_with_masks({0.5, 0.9, 0.1}, {0.25, 0.25, 0.5}, {1, 2, 1});
  Oracle oa(env_a), ob(env_b);
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    CHECK(oa.decide(MaskValue::from_index(1), p) ==
          ob.decide(MaskValue::from_index(1), p));
    CHECK(oa.decide(MaskValue::from_index(2), p) ==
          ob.decide(MaskValue::from_index(2), p));
  }
}
