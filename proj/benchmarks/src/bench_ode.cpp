#include <benchmark/benchmark.h>

#include "gmmsgd/ode.hpp"

using namespace gmmsgd;

// one unit of time at the base step: 100 RK4 steps
static void BM_BinaryOdeUnitTime(benchmark::State& state) {
  const auto model = build_power_law(static_cast<int>(state.range(0)), {1.2, 1.2}, 0.2, 1.0);
  const std::vector<double> grid{0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_binary_logistic(model, 0.5, grid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BinaryOdeUnitTime)->RangeMultiplier(4)->Range(250, 4000)->Complexity();

static void BM_MseOdeUnitTime(benchmark::State& state) {
  const auto model = build_multiclass_power_law(static_cast<int>(state.range(0)), 10, 1.3, 1.0, 1);
  const auto task = make_mse_task(model, 10, 0.0, 2);
  const std::vector<double> grid{0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_mse(model, task, 0.5, grid));
}
BENCHMARK(BM_MseOdeUnitTime)->Arg(250)->Arg(1000);
