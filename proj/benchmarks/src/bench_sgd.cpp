#include <benchmark/benchmark.h>

#include "gmmsgd/sgd.hpp"

using namespace gmmsgd;

static void BM_SgdLogisticStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = build_power_law(d, {1.2, 1.2}, 0.2, 1.0);
  const TaskSpec task;
  auto s = make_sgd_state(model, task, 1);
  for (auto _ : state) sgd_step(s, model, task, 0.5);
  state.SetComplexityN(d);
}
BENCHMARK(BM_SgdLogisticStep)->RangeMultiplier(4)->Range(250, 16000)->Complexity();

static void BM_SgdMseStep(benchmark::State& state) {
  const auto model = build_multiclass_power_law(1000, 10, 1.3, 1.0, 1);
  const auto task = make_mse_task(model, 10, 0.0, 2);
  auto s = make_sgd_state(model, task, 1);
  for (auto _ : state) sgd_step(s, model, task, 0.5);
}
BENCHMARK(BM_SgdMseStep);
