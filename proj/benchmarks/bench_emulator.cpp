#include <benchmark/benchmark.h>

#include "kpiguard/emulator.hpp"

using namespace kpiguard;

static void BM_EmulateRecords(benchmark::State& state) {
  EmulationConfig cfg;
  cfg.n_ues = static_cast<std::uint32_t>(state.range(0));
  cfg.duration_s = 100;
  cfg.slice_split = {cfg.n_ues / 2, cfg.n_ues - cfg.n_ues / 2};
  cfg.seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(emulate(cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_ues * cfg.duration_s);
}
BENCHMARK(BM_EmulateRecords)->Arg(10)->Arg(50);

static void BM_StepOnce(benchmark::State& state) {
  EmulationConfig cfg;
  cfg.n_ues = 50;
  cfg.duration_s = 10;
  cfg.seed = 2;
  TelemetryEmulator emu(cfg);
  std::int64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(emu.step(t++));
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_ues);
}
BENCHMARK(BM_StepOnce);

BENCHMARK_MAIN();
