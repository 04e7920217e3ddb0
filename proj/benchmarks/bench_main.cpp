// Micro benchmarks for the hot paths: design construction, the whitened
// eigenproblem, residualized iteration and limit-law path draws.

#include <benchmark/benchmark.h>

#include "trendcca/cca.hpp"
#include "trendcca/limit_law.hpp"
#include "trendcca/loadings.hpp"
#include "trendcca/mc.hpp"

using namespace trendcca;

static void BM_BuildDesignOperator(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const Eigen::Index K = default_K(T);
  for (auto _ : state) {
    DesignOperator design(build_design(K, T));
    benchmark::DoNotOptimize(design.mdd_min_eig());
  }
  state.SetLabel("K=" + std::to_string(K));
}
BENCHMARK(BM_BuildDesignOperator)->Arg(300)->Arg(1000)->Arg(3000);

static void BM_Cca(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const Eigen::Index p = state.range(1);
  const DesignOperator design(build_design(default_K(T), T));
  const TimeSeriesPanel panel = simulate_dgp({p, p / 2, 1.0, T, 7});
  for (auto _ : state) {
    const CcaResult res = cca(panel.values(), design);
    benchmark::DoNotOptimize(res.eigenvalues(0));
  }
}
BENCHMARK(BM_Cca)->Args({300, 10})->Args({600, 20})->Args({3000, 10});

static void BM_IccIteration(benchmark::State& state) {
  const Eigen::Index T = state.range(0);
  const DesignOperator design(build_design(default_K(T), T));
  const TimeSeriesPanel panel = simulate_dgp({4, 3, 1.0, T, 11});
  const IdentificationPair id = IdentificationPair::coordinates(4, {1, 2, 3});
  const LoadingEstimate start =
      one_step(panel, cca(panel.values(), design), 3, id);
  for (auto _ : state) {
    const LoadingEstimate next = icc_iterate(panel, design, 3, id, start.psi_hat);
    benchmark::DoNotOptimize(next.psi_hat(0, 0));
  }
}
BENCHMARK(BM_IccIteration)->Arg(667)->Arg(2000);

static void BM_ZetaDraws(benchmark::State& state) {
  const Eigen::Index s = state.range(0);
  for (auto _ : state) {
    const ZetaSample sample = simulate_zeta(s, 1000, 100, 3);
    benchmark::DoNotOptimize(sample.values(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_ZetaDraws)->Arg(1)->Arg(5)->Arg(10);

BENCHMARK_MAIN();
