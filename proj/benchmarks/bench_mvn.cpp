#include <benchmark/benchmark.h>

#include "kpiguard/mvn.hpp"

using namespace kpiguard;

namespace {

std::vector<Vec6> gaussian_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec6> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec6 v;
    for (int k = 0; k < 6; ++k) v[k] = 50.0 + 10.0 * rng.normal();
    out.push_back(v);
  }
  return out;
}

}  // namespace

static void BM_FitMvn(benchmark::State& state) {
  const auto samples = gaussian_cloud(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_mvn(samples));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitMvn)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_Sample(benchmark::State& state) {
  const MvnModel model = fit_mvn(gaussian_cloud(10000, 5));
  Rng rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample(model, rng));
  }
}
BENCHMARK(BM_Sample);

static void BM_Mahalanobis(benchmark::State& state) {
  const MvnModel model = fit_mvn(gaussian_cloud(10000, 5));
  Rng rng(9);
  Vec6 x;
  for (int k = 0; k < 6; ++k) x[k] = 55.0 + rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(mahalanobis(model, x));
  }
}
BENCHMARK(BM_Mahalanobis);

BENCHMARK_MAIN();
