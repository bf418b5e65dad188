#include <benchmark/benchmark.h>

#include "gmmsgd/moments.hpp"

using namespace gmmsgd;

static void BM_LogisticMomentsHermite(benchmark::State& state) {
  double m = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(logistic_moments(m, 1.5));
    m += 1e-9;
  }
}
BENCHMARK(BM_LogisticMomentsHermite);

static void BM_LogisticMomentsGraded(benchmark::State& state) {
  double m = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(logistic_moments(m, 20.0));
    m += 1e-9;
  }
}
BENCHMARK(BM_LogisticMomentsGraded);

static void BM_CrossEntropyMoments(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Eigen::MatrixXd B = 0.5 * Eigen::MatrixXd::Identity(k, k);
  const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(k, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cross_entropy_moments(B, m, 0));
}
BENCHMARK(BM_CrossEntropyMoments)->Arg(2)->Arg(3)->Arg(5);
