#include <benchmark/benchmark.h>

#include "kpiguard/lstm.hpp"

using namespace kpiguard;

namespace {

ClassifierArch paper_arch() {
  ClassifierArch arch;
  arch.hidden_units = {256, 128, 64};
  return arch;
}

std::vector<Eigen::MatrixXd> batch_tensor(int length, int batch, Rng& rng) {
  std::vector<Eigen::MatrixXd> xs(length);
  for (auto& x : xs) {
    x.resize(batch, kNumKpiFeatures);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  }
  return xs;
}

}  // namespace

static void BM_ForwardBatch(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  RecurrentClassifier model(paper_arch(), length);
  Rng rng(1);
  model.init_params(rng);
  const auto xs = batch_tensor(length, batch, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward_probs(xs));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBatch)->Args({10, 1})->Args({10, 64})->Args({20, 64});

static void BM_LossAndGradients(benchmark::State& state) {
  const int length = static_cast<int>(state.range(0));
  const int batch = 64;
  RecurrentClassifier model(paper_arch(), length);
  Rng rng(2);
  model.init_params(rng);
  const auto xs = batch_tensor(length, batch, rng);
  std::vector<int> targets(batch);
  for (int b = 0; b < batch; ++b) targets[b] = b % 2;
  Eigen::VectorXd grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_and_gradients(model, xs, targets, {}, nullptr, grads));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LossAndGradients)->Arg(5)->Arg(10)->Arg(20);

BENCHMARK_MAIN();
