#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "ppa/env.hpp"
#include "ppa/oracle.hpp"
#include "ppa/rng.hpp"

using namespace ppa;

TEST_CASE("finite env validation names the offending field") {
  auto prices = stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}});
  CHECK_THROWS_WITH_AS(
      make_finite_env({0.2, 0.8}, {0.5, 0.6}, {1, 2}, prices),
      doctest::Contains("probs"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(make_finite_env({0.2, 1.8}, {0.5, 0.5}, {1, 2}, prices),
                       doctest::Contains("values"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(make_finite_env({0.2, 0.8}, {0.5, 0.5}, {0, 1}, prices),
                       doctest::Contains("mask"), std::invalid_argument);
}

TEST_CASE("price processes cannot be keyed by item") {
  // The per-mask table must have one entry per mask value (or a single shared
  // one); an entry per item is rejected when item count exceeds mask count.
  auto per_item = stochastic_price_process({{PriceDist::Kind::point, 0.1, 0.1},
                                            {PriceDist::Kind::point, 0.2, 0.2},
                                            {PriceDist::Kind::point, 0.3, 0.3}});
  CHECK_THROWS_WITH_AS(
      make_finite_env({0.2, 0.8, 0.5}, {0.4, 0.3, 0.3}, {1, 2, 2}, per_item),
      doctest::Contains("per_mask"), std::invalid_argument);
}

TEST_CASE("point price distribution is constant") {
  PriceDist d{PriceDist::Kind::point, 0.3, 0.3};
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(d.sample(rng) == doctest::Approx(0.3));
}

TEST_CASE("uniform price draws have the right mean") {
  PriceDist d{PriceDist::Kind::uniform, 0.0, 1.0};
  Rng rng(2);
  double sum = 0.0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) sum += d.sample(rng);
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("finite item sampling matches the stated probabilities") {
  auto env = make_finite_env(
      {0.1, 0.5, 0.9}, {0.5, 0.25, 0.25}, {1, 1, 2},
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Rng rng = make_rng(3, Stream::items);
  const long N = 1000000;
  std::vector<long> counts(3, 0);
  for (long i = 0; i < N; ++i) counts[env.sample_item(rng).finite_id]++;
  const std::vector<double> probs = {0.5, 0.25, 0.25};
  for (int i = 0; i < 3; ++i) {
    double sigma = std::sqrt(probs[i] * (1 - probs[i]) * N);
    CHECK(std::abs(counts[i] - probs[i] * N) <= 3.0 * sigma);
  }
}

TEST_CASE("simhash sign patterns") {
  Separators axes;
  axes.rows = {{1.0, 0.0}, {0.0, 1.0}};
  auto m = simhash(axes, {0.5, 0.2});
  CHECK(m.bits == std::vector<std::uint8_t>{1, 1});

  Separators diag;
  diag.rows = {{1.0, -1.0}};
  CHECK(simhash(diag, {0.2, 0.8}).bits == std::vector<std::uint8_t>{0});
  CHECK(simhash(diag, {0.5, 0.5}).bits == std::vector<std::uint8_t>{1});

  CHECK_THROWS_AS(simhash(diag, {0.5}), std::invalid_argument);
}

TEST_CASE("simhash env hyperplanes split the box") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    auto env = make_simhash_env(
        2, 1, DensitySpec{}, ValuationSpec{}, seed,
        stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
    Rng rng = make_rng(seed, Stream::items);
    std::set<int> seen;
    for (int i = 0; i < 10000; ++i)
      seen.insert(env.mask_value(env.sample_item(rng)).key());
    CHECK(seen.size() == 2);
  }
}

TEST_CASE("truncated gaussian samples stay inside the box") {
  DensitySpec dens;
  dens.kind = DensitySpec::Kind::truncated_gaussian;
  dens.mean = {0.5, 0.5};
  dens.stddev = {0.3, 0.3};
  auto env = make_simhash_env(
      2, 1, dens, ValuationSpec{}, 4,
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    auto x = env.sample_point(rng);
    for (double c : x) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
  }
}

TEST_CASE("coordinate-mean valuation has expectation one half under uniform") {
  auto env = make_simhash_env(
      3, 1, DensitySpec{}, ValuationSpec{}, 6,
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Rng rng(7);
  double sum = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) sum += env.value_of(env.sample_item(rng));
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("affine valuation must be nonnegative on the box") {
  ValuationSpec val;
  val.kind = ValuationSpec::Kind::affine_clipped;
  val.weights = {1.0, -0.8};
  val.offset = 0.2;
  CHECK_THROWS_WITH_AS(
      make_simhash_env(2, 1, DensitySpec{}, val, 1,
                       stochastic_price_process(
                           {{PriceDist::Kind::uniform, 0.0, 1.0}})),
      doctest::Contains("valuation"), std::invalid_argument);

  val.offset = 0.8;
  auto env = make_simhash_env(
      2, 1, DensitySpec{}, val, 1,
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    double v = env.value_of(env.sample_item(rng));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("periodic-spike prices spike exactly every period rounds") {
  AdversarialPrices adv = adversarial_price_process("periodic-spike", 9);
  adv.period = 10;
  adv.base = 0.1;
  const long T = 997;
  auto table = materialize_adversarial_table(adv, T, 2, 1.0, {0.5, 0.5});
  long spikes = 0;
  for (long t = 1; t <= T; ++t) {
    if (table[t - 1][0] == 1.0) ++spikes;
    else CHECK(table[t - 1][0] == doctest::Approx(0.1));
  }
  CHECK(spikes == T / 10);
}

TEST_CASE("near-oracle prices alternate around the conditional value") {
  AdversarialPrices adv = adversarial_price_process("near-oracle", 9);
  adv.epsilon = 0.05;
  auto table = materialize_adversarial_table(adv, 6, 1, 1.0, {0.5});
  for (long t = 1; t <= 6; ++t) {
    double expected = (t % 2 == 1) ? 0.45 : 0.55;
    CHECK(table[t - 1][0] == doctest::Approx(expected));
    // Oracle buys below the conditional value, skips above it.
    CHECK(Oracle::decision(0.5, table[t - 1][0]) == (t % 2 == 1 ? 1 : 0));
  }
}

TEST_CASE("threshold-sweep prices cycle across the stated band") {
  AdversarialPrices adv = adversarial_price_process("threshold-sweep", 9);
  adv.amplitude = 0.2;
  adv.sweep_points = 21;
  auto table = materialize_adversarial_table(adv, 100, 1, 1.0, {0.5});
  double lo = 1.0, hi = 0.0;
  for (long t = 1; t <= 100; ++t) {
    lo = std::min(lo, table[t - 1][0]);
    hi = std::max(hi, table[t - 1][0]);
    if (t + 21 <= 100) CHECK(table[t - 1][0] == doctest::Approx(table[t + 20][0]));
  }
  CHECK(lo == doctest::Approx(0.3));
  CHECK(hi == doctest::Approx(0.7));
}

TEST_CASE("adversarial tables are fixed before the run") {
  AdversarialPrices adv = adversarial_price_process("threshold-sweep", 12);
  auto a = materialize_adversarial_table(adv, 50, 2, 1.0, {0.4, 0.6});
  auto b = materialize_adversarial_table(adv, 50, 2, 1.0, {0.4, 0.6});
  CHECK(a == b);
}

TEST_CASE("unknown adversarial generator is rejected") {
  CHECK_THROWS_AS(adversarial_price_process("random-walk", 1), std::invalid_argument);
}

TEST_CASE("environment JSON round trip") {
  SUBCASE("finite") {
    auto env = make_finite_env(
        {0.1, 0.5, 0.9}, {0.5, 0.25, 0.25}, {1, 1, 2},
        stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0},
                                  {PriceDist::Kind::point, 0.3, 0.3}}));
    auto back = env_from_json(env_to_json(env));
    CHECK(env_to_json(back) == env_to_json(env));
    CHECK(back.finite().values == env.finite().values);
  }
  SUBCASE("simhash") {
    AdversarialPrices adv = adversarial_price_process("near-oracle", 3);
    auto env = make_simhash_env(3, 2, DensitySpec{}, ValuationSpec{}, 11, adv);
    auto back = env_from_json(env_to_json(env));
    CHECK(env_to_json(back) == env_to_json(env));
    CHECK(back.continuous().separators.rows == env.continuous().separators.rows);
  }
}

TEST_CASE("per-mask price draws consult only their own distribution") {
  auto env = make_finite_env(
      {0.2, 0.8}, {0.5, 0.5}, {1, 2},
      stochastic_price_process({{PriceDist::Kind::point, 0.25, 0.25},
                                {PriceDist::Kind::point, 0.75, 0.75}}));
  const auto& st = std::get<StochasticPrices>(env.prices);
  Rng rng(1);
  CHECK(st.per_mask[0].sample(rng) == doctest::Approx(0.25));
  CHECK(st.per_mask[1].sample(rng) == doctest::Approx(0.75));
}
