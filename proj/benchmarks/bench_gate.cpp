#include <benchmark/benchmark.h>

#include "kpiguard/emulator.hpp"
#include "kpiguard/gate.hpp"

using namespace kpiguard;

namespace {

struct GateFixture {
  ClassifierArch arch;
  RecurrentClassifier model;
  NormalizationStats stats;
  std::vector<KpiReportMessage> stream;

  explicit GateFixture(int length)
      : arch{kNumKpiFeatures, {256, 128, 64}, 2, 0.2},
        model(arch, length) {
    Rng rng(11);
    model.init_params(rng);
    EmulationConfig cfg;
    cfg.n_ues = 20;
    cfg.duration_s = 60;
    cfg.slice_split = {10, 10};
    cfg.seed = 3;
    TelemetryEmulator emu(cfg);
    const Dataset data = emu.run();
    std::vector<Label> labels(data.size(), Label::kBenign);
    stats = fit_normalization(data, labels);
    stream = build_report_stream(data, nullptr, emu.topology());
  }
};

}  // namespace

static void BM_GateMessages(benchmark::State& state) {
  GateFixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    DetectionGate gate({GatePolicy::kTagAndForward}, fx.model, fx.stats);
    for (const auto& msg : fx.stream) {
      benchmark::DoNotOptimize(gate.process(msg));
    }
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(fx.stream.size()));
}
BENCHMARK(BM_GateMessages)->Arg(1)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
