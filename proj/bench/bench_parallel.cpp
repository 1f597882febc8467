// Serial reference vs OpenMP for the two parallel kernels.

#include "matchbandits/config.hpp"
#include "matchbandits/environments.hpp"
#include "matchbandits/harness.hpp"
#include "matchbandits/parallel.hpp"
#include "matchbandits/reproduce.hpp"

#include <benchmark/benchmark.h>

namespace mb = matchbandits;

namespace {

mb::Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? mb::Execution::kSerial : mb::Execution::kParallel;
}

void gap_sampling(benchmark::State& state) {
  const auto market = mb::random_market(4, 4, 3, 0.1, 1);
  const mb::ContextGenerator gen = mb::NormalizedGaussian{};
  for (auto _ : state) {
    auto batch = mb::sample_gap_statistics(gen, market.theta(), market.n_arms(), state.range(1), 1, mode(state));
    benchmark::DoNotOptimize(batch.delta_min.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void replicas(benchmark::State& state) {
  mb::ReproduceOptions o;
  o.horizon = state.range(1);
  o.replicas = 4;
  const auto config = mb::parse_experiment(mb::figure_configs("fig1", o).front().second);
  for (auto _ : state) {
    auto result = mb::run_experiment(config, mode(state));
    benchmark::DoNotOptimize(result.policies.data());
  }
}

}  // namespace

BENCHMARK(gap_sampling)->ArgNames({"parallel", "draws"})->ArgsProduct({{0, 1}, {100000, 1000000}})->Unit(benchmark::kMillisecond);
BENCHMARK(replicas)->ArgNames({"parallel", "horizon"})->ArgsProduct({{0, 1}, {5000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
