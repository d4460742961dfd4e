#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ppa/baselines.hpp"
#include "ppa/env.hpp"
#include "ppa/exp4vc.hpp"
#include "ppa/oracle.hpp"
#include "ppa/protocol.hpp"
#include "ppa/rng.hpp"

using namespace ppa;

namespace {

PolicyGrid random_grid(Rng& rng, int n, int max_extra) {
  std::uniform_int_distribution<int> count(0, max_extra);
  std::uniform_real_distribution<double> price(0.01, 1.0);
  std::vector<std::pair<int, double>> obs;
  for (int i = 1; i <= n; ++i) {
    int c = count(rng);
    for (int k = 0; k < c; ++k) obs.emplace_back(i, price(rng));
  }
  return build_policy_grid(n, 1.0, obs);
}

// Drives both weight representations through the same random rounds and
// checks the mixtures agree at every step.
void check_equivalence(Rng& rng, int n, int rounds) {
  PolicyGrid grid = random_grid(rng, n, 3);
  BucketAccumulators acc(grid);
  NaiveExp4 naive(grid);
  const double gamma = 0.1;
  const double bonus = 0.02;
  std::uniform_int_distribution<int> pick_i(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < rounds; ++t) {
    int i_t = pick_i(rng);
    int j_t = locate_bucket(grid, i_t, u(rng));
    auto fast = mixture_probs(grid, acc, i_t, j_t, gamma);
    auto slow = naive.mixture(i_t, j_t, gamma);
    CHECK(fast[0] == doctest::Approx(slow[0]).epsilon(1e-9));
    CHECK(fast[1] == doctest::Approx(slow[1]).epsilon(1e-9));
    int arm = u(rng) < fast[1] ? 1 : 0;
    double reward = u(rng);
    update_accumulators(acc, i_t, j_t, arm, reward, fast, gamma, bonus);
    naive.update(i_t, j_t, arm, reward, slow, gamma, bonus);
  }
}

}  // namespace

TEST_CASE("init_length evaluates the formula and caps at half the horizon") {
  CHECK(init_length(100, 1, 0.5) == 24);
  CHECK(init_length(4, 4, 0.5) == 2);
  CHECK_THROWS_AS(init_length(1, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(init_length(100, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(init_length(100, 1, 1.0), std::invalid_argument);
}

TEST_CASE("policy grid collects per-index thresholds with the 0 sentinel") {
  SUBCASE("observed prices sorted per index") {
    auto grid = build_policy_grid(2, 1.0, {{1, 0.3}, {1, 0.7}, {2, 0.5}});
    CHECK(grid.thresholds[0] == std::vector<double>{0.0, 0.3, 0.7});
    CHECK(grid.thresholds[1] == std::vector<double>{0.0, 0.5});
    CHECK(grid.log_grid_size() == doctest::Approx(std::log(6.0)));
  }
  SUBCASE("empty initialization leaves singleton grids") {
    auto grid = build_policy_grid(2, 1.0, {});
    CHECK(grid.thresholds[0] == std::vector<double>{0.0});
    CHECK(grid.thresholds[1] == std::vector<double>{0.0});
    CHECK(grid.log_grid_size() == doctest::Approx(0.0));
  }
  SUBCASE("duplicates collapse") {
    auto grid = build_policy_grid(1, 1.0, {{1, 0.3}, {1, 0.3}});
    CHECK(grid.thresholds[0] == std::vector<double>{0.0, 0.3});
  }
}

TEST_CASE("bucket location uses half-open intervals with padding") {
  auto grid = build_policy_grid(1, 1.0, {{1, 0.3}, {1, 0.7}});
  CHECK(locate_bucket(grid, 0, 0.3) == 1);
  CHECK(locate_bucket(grid, 0, 0.0) == 0);
  CHECK(locate_bucket(grid, 0, 0.9) == 3);
  CHECK(locate_bucket(grid, 0, 0.31) == 2);
  CHECK(locate_bucket(grid, 0, 0.7) == 2);
}

TEST_CASE("fresh accumulators give uniform policy mixtures") {
  auto grid = build_policy_grid(1, 1.0, {{1, 0.3}, {1, 0.7}});
  BucketAccumulators acc(grid);
  const double gamma = 0.05;
  SUBCASE("one of three policies buys in the top bucket") {
    auto probs = mixture_probs(grid, acc, 0, locate_bucket(grid, 0, 0.5), gamma);
    CHECK(probs[1] == doctest::Approx((1.0 - 2.0 * gamma) / 3.0 + gamma));
  }
  SUBCASE("price zero means unanimous buying") {
    auto probs = mixture_probs(grid, acc, 0, 0, gamma);
    CHECK(probs[1] == doctest::Approx(1.0 - gamma));
  }
}

TEST_CASE("a single-policy grid never buys at positive prices") {
  auto grid = build_policy_grid(2, 1.0, {});
  NaiveExp4 naive(grid);
  CHECK(naive.policy_count() == 1);
  auto probs = naive.mixture(0, locate_bucket(grid, 0, 0.5), 0.1);
  CHECK(probs[1] == doctest::Approx(0.1));
}

TEST_CASE("bucketized mixtures equal naive enumeration") {
  Rng rng(1234);
  for (int rep = 0; rep < 10; ++rep) {
    std::uniform_int_distribution<int> pick_n(1, 3);
    check_equivalence(rng, pick_n(rng), 30);
  }
}

TEST_CASE("updates touch only the context bucket") {
  auto grid = build_policy_grid(3, 1.0, {{1, 0.3}, {2, 0.5}, {2, 0.8}, {3, 0.2}});
  BucketAccumulators acc(grid);
  auto probs = mixture_probs(grid, acc, 1, 1, 0.1);
  update_accumulators(acc, 1, 1, 1, 0.7, probs, 0.1, 0.01);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < acc.buckets(i); ++j)
      for (int b = 0; b < 2; ++b) {
        if (i == 1 && j == 1)
          CHECK(acc.g(i, j, b) != 0.0);
        else
          CHECK(acc.g(i, j, b) == 0.0);
      }
}

TEST_CASE("zero reward and zero bonus leave the weights unchanged") {
  auto grid = build_policy_grid(1, 1.0, {{1, 0.4}});
  BucketAccumulators acc(grid);
  auto probs = mixture_probs(grid, acc, 0, 1, 0.1);
  update_accumulators(acc, 0, 1, 0, 0.0, probs, 0.1, 0.0);
  for (int j = 0; j < acc.buckets(0); ++j)
    for (int b = 0; b < 2; ++b) CHECK(acc.g(0, j, b) == 0.0);
}

TEST_CASE("mixtures stay normalized and floored after random updates") {
  Rng rng(77);
  auto grid = random_grid(rng, 3, 3);
  BucketAccumulators acc(grid);
  const double gamma = 0.07;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick_i(0, 2);
  for (int t = 0; t < 40; ++t) {
    int i_t = pick_i(rng);
    int j_t = locate_bucket(grid, i_t, u(rng));
    auto probs = mixture_probs(grid, acc, i_t, j_t, gamma);
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probs[0] >= gamma - 1e-9);
    CHECK(probs[1] >= gamma - 1e-9);
    CHECK(probs[0] <= 1.0 - gamma + 1e-9);
    CHECK(probs[1] <= 1.0 - gamma + 1e-9);
    int arm = u(rng) < probs[1] ? 1 : 0;
    update_accumulators(acc, i_t, j_t, arm, u(rng), probs, gamma, 0.02);
  }
}

TEST_CASE("mixture cost is linear in the accumulator size") {
  Rng rng(5);
  auto grid = random_grid(rng, 3, 3);
  BucketAccumulators acc(grid);
  long ops = 0;
  mixture_probs(grid, acc, 0, 1, 0.1, &ops);
  CHECK(ops <= 2 * (grid.n + grid.sum_m() + 2));
}

TEST_CASE("threshold policies shatter one context per index") {
  for (int n = 1; n <= 4; ++n) {
    std::vector<std::pair<int, double>> obs;
    for (int i = 1; i <= n; ++i) obs.emplace_back(i, 1.0);
    auto grid = build_policy_grid(n, 1.0, obs);
    NaiveExp4 naive(grid);
    std::set<std::vector<int>> labelings;
    for (std::size_t p = 0; p < naive.policy_count(); ++p) {
      std::vector<int> label(n);
      for (int i = 0; i < n; ++i)
        label[i] = naive.policy(p)[i] >= locate_bucket(grid, i, 0.5) ? 1 : 0;
      labelings.insert(label);
    }
    CHECK(labelings.size() == (1u << n));
  }
}

TEST_CASE("no n+1 contexts are shattered") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int n = 1; n <= 3; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      std::uniform_int_distribution<int> pick_i(0, n - 1);
      std::vector<std::pair<int, double>> ctx;
      for (int k = 0; k <= n; ++k) ctx.emplace_back(pick_i(rng), u(rng));

      // sweep thresholds over a covering grid, collecting behavior vectors
      std::set<std::vector<int>> labelings;
      const int steps = 21;
      std::vector<int> choice(n, 0);
      for (;;) {
        std::vector<int> label(ctx.size());
        for (std::size_t k = 0; k < ctx.size(); ++k) {
          double v = choice[ctx[k].first] / static_cast<double>(steps - 1);
          label[k] = ctx[k].second <= v ? 1 : 0;
        }
        labelings.insert(label);
        int i = 0;
        while (i < n) {
          if (++choice[i] < steps) break;
          choice[i] = 0;
          ++i;
        }
        if (i == n) break;
      }
      CHECK(labelings.size() < (1u << (n + 1)));
    }
  }
}

TEST_CASE("the observed-price grid is behaviorally complete") {
  Rng rng(47);
  std::uniform_int_distribution<int> cents(1, 100);
  for (int n = 1; n <= 3; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      std::uniform_int_distribution<int> pick_i(1, n);
      int tau = 1 + static_cast<int>(rng() % 5);
      std::vector<std::pair<int, double>> obs;
      for (int t = 0; t < tau; ++t)
        obs.emplace_back(pick_i(rng), cents(rng) / 100.0);
      auto grid = build_policy_grid(n, 1.0, obs);

      auto behavior = [&](const std::vector<double>& v) {
        std::vector<int> label(obs.size());
        for (std::size_t k = 0; k < obs.size(); ++k)
          label[k] = obs[k].second <= v[obs[k].first - 1] ? 1 : 0;
        return label;
      };

      std::set<std::vector<int>> from_grid;
      {
        std::vector<std::size_t> choice(n, 0);
        for (;;) {
          std::vector<double> v(n);
          for (int i = 0; i < n; ++i) v[i] = grid.thresholds[i][choice[i]];
          from_grid.insert(behavior(v));
          int i = 0;
          while (i < n) {
            if (++choice[i] < grid.thresholds[i].size()) break;
            choice[i] = 0;
            ++i;
          }
          if (i == n) break;
        }
      }

      std::set<std::vector<int>> from_sweep;
      {
        const int steps = 101;
        std::vector<int> choice(n, 0);
        for (;;) {
          std::vector<double> v(n);
          for (int i = 0; i < n; ++i) v[i] = choice[i] / 100.0;
          from_sweep.insert(behavior(v));
          int i = 0;
          while (i < n) {
            if (++choice[i] < steps) break;
            choice[i] = 0;
            ++i;
          }
          if (i == n) break;
        }
      }
      CHECK(from_grid == from_sweep);
    }
  }
}

TEST_CASE("initialization decisions are fair coin flips") {
  long buys = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Exp4VCStrategy s;
    EnvView view;
    view.H = 1.0;
    view.n_mask = 2;
    s.start(view, 4000, seed);
    for (long t = 0; t < s.tau(); ++t) {
      int b = s.decide(MaskValue::from_index(1 + static_cast<int>(t % 2)), 0.5);
      s.feedback(b ? std::optional<Item>(Item::finite(0)) : std::nullopt, 0.0);
      buys += b;
      ++total;
    }
  }
  CHECK(std::abs(buys / static_cast<double>(total) - 0.5) < 0.05);
}

TEST_CASE("the learning rate follows the grid size") {
  auto env = make_finite_env(
      {0.9, 0.1}, {0.5, 0.5}, {1, 2},
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Exp4VCStrategy s;
  auto tr = run_protocol(env, s, 2000, 3);
  (void)tr;
  double expected = std::sqrt(s.grid().log_grid_size() /
                              (2.0 * (2000.0 - static_cast<double>(s.tau()))));
  CHECK(s.gamma() == doctest::Approx(std::clamp(expected, 1e-6, 0.499)));
  CHECK(std::sqrt(std::log(6.0) / 600.0) == doctest::Approx(0.0546).epsilon(1e-3));
}

TEST_CASE("the strategy beats both trivial baselines") {
  auto env = make_finite_env(
      {0.9, 0.1}, {0.5, 0.5}, {1, 2},
      stochastic_price_process({{PriceDist::Kind::point, 0.1, 0.1},
                                {PriceDist::Kind::point, 0.9, 0.9}}));
  Oracle oracle(env);
  double sum_exp4 = 0.0, sum_always = 0.0, sum_never = 0.0;
  const int seeds = 50;
  for (int seed = 1; seed <= seeds; ++seed) {
    Exp4VCStrategy s;
    AlwaysBuyStrategy a;
    NeverBuyStrategy nb;
    sum_exp4 += oracle.regret(run_protocol(env, s, 5000, seed, &oracle)).final_regret();
    sum_always += oracle.regret(run_protocol(env, a, 5000, seed, &oracle)).final_regret();
    sum_never += oracle.regret(run_protocol(env, nb, 5000, seed, &oracle)).final_regret();
  }
  CHECK(sum_exp4 / seeds < sum_always / seeds);
  CHECK(sum_exp4 / seeds < sum_never / seeds);
}

TEST_CASE("debug log records both reward-estimate conventions") {
  std::string path = "exp4vc_debug_test.log";
  auto env = make_finite_env(
      {0.9, 0.1}, {0.5, 0.5}, {1, 2},
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Exp4VCStrategy::Params params;
  params.debug_path = path;
  Exp4VCStrategy s(params);
  run_protocol(env, s, 500, 3);

  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  CHECK(text.find("rhat_std=") != std::string::npos);
  CHECK(text.find("rhat_verbatim=") != std::string::npos);
  CHECK(text.find("# grid") != std::string::npos);

  std::ostringstream dump;
  s.dump_accumulators(dump);
  CHECK(dump.str().find("G[0][0]") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("stepping past the horizon is rejected") {
  auto env = make_finite_env(
      {0.9, 0.1}, {0.5, 0.5}, {1, 2},
      stochastic_price_process({{PriceDist::Kind::uniform, 0.0, 1.0}}));
  Exp4VCStrategy s;
  run_protocol(env, s, 100, 3);
  CHECK_THROWS_AS(s.decide(MaskValue::from_index(1), 0.5), phase_error);
}
