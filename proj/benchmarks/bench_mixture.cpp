#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ppa/exp4vc.hpp"
#include "ppa/rng.hpp"

using namespace ppa;

namespace {

struct Instance {
  PolicyGrid grid;
  BucketAccumulators acc;
  std::vector<std::pair<int, int>> contexts;  // (i_t, j_t) per step

  Instance(int n, int tau) : grid(make_grid(n, tau)), acc(grid) {
    Rng rng(7);
    std::uniform_int_distribution<int> pick_i(0, n - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 256; ++t) {
      int i_t = pick_i(rng);
      contexts.emplace_back(i_t, locate_bucket(grid, i_t, u(rng)));
    }
  }

  static PolicyGrid make_grid(int n, int tau) {
    Rng rng(3);
    std::uniform_int_distribution<int> pick_i(1, n);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<std::pair<int, double>> obs;
    for (int t = 0; t < tau; ++t) obs.emplace_back(pick_i(rng), u(rng));
    return build_policy_grid(n, 1.0, obs);
  }
};

void BM_MixtureProbs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int tau = static_cast<int>(state.range(1));
  Instance inst(n, tau);
  std::size_t k = 0;
  for (auto _ : state) {
    auto [i_t, j_t] = inst.contexts[k++ & 255];
    benchmark::DoNotOptimize(mixture_probs(inst.grid, inst.acc, i_t, j_t, 0.05));
  }
  state.SetComplexityN(n + tau);
}

void BM_UpdateAccumulators(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int tau = static_cast<int>(state.range(1));
  Instance inst(n, tau);
  std::size_t k = 0;
  for (auto _ : state) {
    auto [i_t, j_t] = inst.contexts[k++ & 255];
    auto probs = mixture_probs(inst.grid, inst.acc, i_t, j_t, 0.05);
    update_accumulators(inst.acc, i_t, j_t, 1, 0.7, probs, 0.05, 0.01);
  }
}

}  // namespace

BENCHMARK(BM_MixtureProbs)
    ->Args({2, 10})
    ->Args({2, 100})
    ->Args({2, 1000})
    ->Args({8, 100})
    ->Args({8, 1000})
    ->Args({32, 1000})
    ->Args({32, 10000})
    ->Complexity(benchmark::oN);

BENCHMARK(BM_UpdateAccumulators)->Args({8, 1000})->Args({32, 10000});

BENCHMARK_MAIN();
