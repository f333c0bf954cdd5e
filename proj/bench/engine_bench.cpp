// Serial reference loop vs OpenMP node-parallel loop on the synthetic D-PPCA
// workload. Each benchmark runs a fixed number of rounds.

#include "netadmm/data.hpp"
#include "netadmm/engine.hpp"
#include "netadmm/ppca.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace netadmm;

void BM_DppcaRounds(benchmark::State& state, Execution execution, Scheme scheme) {
  const auto nodes = static_cast<std::size_t>(state.range(0));
  const SyntheticData data = generate_synthetic({});
  const auto shards = partition_even(data.X, nodes);
  const Graph graph = build_complete(nodes);

  EngineConfig cfg;
  cfg.scheme = scheme;
  cfg.execution = execution;
  cfg.max_iterations = 20;
  cfg.convergence_tol = 1e-300;

  for (auto _ : state) {
    state.PauseTiming();
    std::vector<ModelPtr> models;
    for (std::size_t i = 0; i < nodes; ++i) {
      std::mt19937_64 rng(i);
      models.push_back(std::make_unique<DppcaNodeModel>(shards[i], random_init(shards[i], 5, rng)));
    }
    state.ResumeTiming();
    benchmark::DoNotOptimize(run(graph, cfg, models));
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iterations);
}

BENCHMARK_CAPTURE(BM_DppcaRounds, fixed_serial, Execution::serial, Scheme::fixed)->Arg(12)->Arg(20);
BENCHMARK_CAPTURE(BM_DppcaRounds, fixed_parallel, Execution::parallel, Scheme::fixed)->Arg(12)->Arg(20);
BENCHMARK_CAPTURE(BM_DppcaRounds, ap_serial, Execution::serial, Scheme::ap)->Arg(12)->Arg(20);
BENCHMARK_CAPTURE(BM_DppcaRounds, ap_parallel, Execution::parallel, Scheme::ap)->Arg(12)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
