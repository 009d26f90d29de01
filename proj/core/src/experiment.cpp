#include "kpiguard/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "kpiguard/config.hpp"
#include "kpiguard/error.hpp"
#include "kpiguard/xapp.hpp"

namespace kpiguard {

namespace {

constexpr std::uint64_t kDataStream = 0x31;
constexpr std::uint64_t kPlanStream = 0x32;
constexpr std::uint64_t kCellStream = 0x33;
constexpr std::uint64_t kSubsampleStream = 0x34;
constexpr std::uint64_t kModelIdStream = 0x35;

constexpr std::size_t kEvalBatch = 256;

std::uint64_t cell_seed(const ExperimentConfig& config, int length,
                        double factor) {
  return derive_seed(derive_seed(config.seed, kCellStream,
                                 static_cast<std::uint64_t>(length)),
                     bits_of(factor));
}

// Proportional per-class subsample, deterministic in the cell seed. Keeps
// window order stable by re-sorting the chosen indices.
std::vector<Window> subsample_windows(std::vector<Window> windows,
                                      std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || windows.size() <= cap) return windows;
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < windows.size(); ++i) {
    by_class[windows[i].label == Label::kPoisoned ? 1 : 0].push_back(i);
  }
  const double scale =
      static_cast<double>(cap) / static_cast<double>(windows.size());
  Rng rng(derive_seed(seed, kSubsampleStream));
  std::vector<std::size_t> chosen;
  for (auto& indices : by_class) {
    if (indices.empty()) continue;
    std::size_t keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(scale * static_cast<double>(indices.size()))));
    keep = std::min(keep, indices.size());
    rng.shuffle(indices);
    chosen.insert(chosen.end(), indices.begin(),
                  indices.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Window> out;
  out.reserve(chosen.size());
  for (std::size_t idx : chosen) out.push_back(std::move(windows[idx]));
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace

void ExperimentConfig::validate() const {
  emulation.validate();
  train.validate();
  arch.validate();
  if (sequence_lengths.empty()) {
    throw ConfigError("sequence_lengths must not be empty");
  }
  for (int l : sequence_lengths) {
    if (l < 1) throw ConfigError("sequence lengths must be positive");
  }
  if (amplification_factors.empty()) {
    throw ConfigError("amplification_factors must not be empty");
  }
  for (double f : amplification_factors) {
    if (!(f > 0.0)) throw ConfigError("amplification factors must be > 0");
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("split_fraction must be in (0, 1)");
  }
  if (!(baseline_quantile > 0.0 && baseline_quantile <= 1.0)) {
    throw ConfigError("baseline_quantile must be in (0, 1]");
  }
  if (!(replay_speedup > 0.0)) {
    throw ConfigError("replay_speedup must be positive");
  }
  if (!(xapp_mbps_per_prb > 0.0)) {
    throw ConfigError("xapp_mbps_per_prb must be positive");
  }
  if (window.length < 1) throw ConfigError("window.length must be positive");
}

PreparedData prepare_data(const ExperimentConfig& config, double factor) {
  config.validate();
  PreparedData data;
  data.emulation = config.emulation;
  // One benign run and one victim/interval schedule per experiment seed; the
  // amplification factor is the only thing that varies across grid columns,
  // so detection rates are comparable across factors.
  data.emulation.seed = derive_seed(config.seed, kDataStream);

  TelemetryEmulator emulator(data.emulation);
  data.topology = emulator.topology();
  data.benign = emulator.run();

  PlanParams params = config.attack;
  params.amplification_factor = factor;
  data.plan = make_plan(emulator.population(), data.emulation.duration_s,
                        params,
                        derive_seed(data.emulation.seed, kPlanStream));
  auto [poisoned, labels] = poison(data.benign, data.plan);
  data.poisoned = std::move(poisoned);
  data.labels = std::move(labels);
  data.split_t = static_cast<std::int64_t>(
      static_cast<double>(data.emulation.duration_s) * config.split_fraction);
  return data;
}

SplitData split_by_time(const Dataset& dataset,
                        const std::vector<Label>& labels,
                        std::int64_t split_t) {
  if (labels.size() != dataset.size()) {
    throw ShapeError("label count does not match record count");
  }
  SplitData split;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].timestamp < split_t) {
      split.train_records.push_back(dataset[i]);
      split.train_labels.push_back(labels[i]);
    } else {
      split.test_records.push_back(dataset[i]);
      split.test_labels.push_back(labels[i]);
    }
  }
  return split;
}

ConfusionMatrix evaluate_windows(const RecurrentClassifier& model,
                                 const NormalizationStats& stats,
                                 const std::vector<Window>& windows) {
  ConfusionMatrix cm;
  std::vector<Window> batch;
  std::vector<Label> truth;
  batch.reserve(kEvalBatch);
  auto flush = [&]() {
    if (batch.empty()) return;
    const Eigen::MatrixXd probs = infer_batch(model, batch, stats);
    for (Eigen::Index b = 0; b < probs.rows(); ++b) {
      const Label predicted =
          probs(b, 1) >= 0.5 ? Label::kPoisoned : Label::kBenign;
      cm.add(truth[static_cast<std::size_t>(b)], predicted);
    }
    batch.clear();
    truth.clear();
  };
  for (const Window& w : windows) {
    batch.push_back(w);
    truth.push_back(w.label);
    if (batch.size() == kEvalBatch) flush();
  }
  flush();
  return cm;
}

CellResult run_cell(const ExperimentConfig& config, const PreparedData& data,
                    int sequence_length) {
  const double factor = data.plan.amplification_factor;
  const std::uint64_t seed = cell_seed(config, sequence_length, factor);

  const SplitData split =
      split_by_time(data.poisoned, data.labels, data.split_t);

  const NormalizationStats stats =
      fit_normalization(split.train_records, split.train_labels);

  const WindowSpec spec{sequence_length, 1};
  std::vector<Window> train_windows =
      make_windows(split.train_records, split.train_labels, spec);
  train_windows = subsample_windows(std::move(train_windows),
                                    config.max_train_windows, seed);
  for (Window& w : train_windows) {
    w.features = normalize(w.features, stats);
  }

  TrainConfig tconf = config.train;
  tconf.seed = seed;
  TrainReport report;
  RecurrentClassifier model = train(train_windows, config.arch, tconf, &report);

  const std::vector<Window> test_windows =
      make_windows(split.test_records, split.test_labels, spec);
  MetricsRow metrics;
  metrics.cm = evaluate_windows(model, stats, test_windows);
  metrics.rates = compute_metrics(metrics.cm);
  metrics.sequence_length = sequence_length;
  metrics.amplification_factor = factor;
  metrics.seed = config.seed;
  metrics.model_id = hex64(derive_seed(seed, kModelIdStream));
  return CellResult{sequence_length, factor, stats, std::move(model),
                    std::move(report), std::move(metrics)};
}

CellResult run_cell(const ExperimentConfig& config, int sequence_length,
                    double factor) {
  return run_cell(config, prepare_data(config, factor), sequence_length);
}

std::string format_factor(double factor) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", factor);
  return buf;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "L,f,TP,FP,TN,FN,DR,FPR,FNR,seed\n";
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%lld,%lld,%lld,%lld,%s,%s,%s,%llu\n",
                  r.sequence_length, format_factor(r.amplification_factor).c_str(),
                  static_cast<long long>(r.cm.tp), static_cast<long long>(r.cm.fp),
                  static_cast<long long>(r.cm.tn), static_cast<long long>(r.cm.fn),
                  rate_to_string(r.rates.detection_rate).c_str(),
                  rate_to_string(r.rates.false_positive_rate).c_str(),
                  rate_to_string(r.rates.false_negative_rate).c_str(),
                  static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

std::string plotdata_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "L,f,metric,value\n";
  char buf[128];
  for (const MetricsRow& r : rows) {
    const std::pair<const char*, const std::optional<double>*> metrics[] = {
        {"DR", &r.rates.detection_rate},
        {"FPR", &r.rates.false_positive_rate},
        {"FNR", &r.rates.false_negative_rate}};
    for (const auto& [name, value] : metrics) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%s,%s\n", r.sequence_length,
                    format_factor(r.amplification_factor).c_str(), name,
                    rate_to_string(*value).c_str());
      out += buf;
    }
  }
  return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                ",predicted_poisoned,predicted_benign\n"
                "actual_poisoned,%lld,%lld\n"
                "actual_benign,%lld,%lld\n",
                static_cast<long long>(cm.tp), static_cast<long long>(cm.fn),
                static_cast<long long>(cm.fp), static_cast<long long>(cm.tn));
  return buf;
}

GridResult run_grid(const ExperimentConfig& config,
                    const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);

  GridResult result;
  std::vector<MetricsRow> rows;
  std::vector<std::pair<double, double>> prepare_times;
  for (double factor : config.amplification_factors) {
    PreparedData data;
    std::string data_error;
    const auto tp0 = std::chrono::steady_clock::now();
    try {
      data = prepare_data(config, factor);
    } catch (const Error& e) {
      data_error = std::string("prepare: ") + e.what();
    }
    prepare_times.emplace_back(
        factor, std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              tp0)
                    .count());
    for (int length : config.sequence_lengths) {
      GridCellStatus status;
      status.sequence_length = length;
      status.amplification_factor = factor;
      const auto t0 = std::chrono::steady_clock::now();
      if (!data_error.empty()) {
        status.ok = false;
        status.error = data_error;
      } else {
        try {
          CellResult cell = run_cell(config, data, length);
          status.ok = true;
          status.row = cell.metrics;
          rows.push_back(cell.metrics);
          write_file(out_dir / ("cm_L" + std::to_string(length) + "_f" +
                                format_factor(factor) + ".csv"),
                     confusion_csv(cell.metrics.cm));
        } catch (const Error& e) {
          status.ok = false;
          status.error = std::string("cell: ") + e.what();
          result.all_ok = false;
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      status.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      if (!status.ok) result.all_ok = false;
      result.cells.push_back(std::move(status));
    }
  }

  write_file(out_dir / "metrics.csv", metrics_csv(rows));
  write_file(out_dir / "plotdata.csv", plotdata_csv(rows));

  nlohmann::json manifest;
  manifest["config_hash"] = hex64(config_hash(config));
  manifest["seed"] = config.seed;
  manifest["version"] = library_version();
  auto& cells = manifest["cells"] = nlohmann::json::array();
  for (const GridCellStatus& s : result.cells) {
    nlohmann::json jc;
    jc["L"] = s.sequence_length;
    jc["f"] = format_factor(s.amplification_factor);
    jc["status"] = s.ok ? "ok" : s.error;
    if (s.ok) jc["model_id"] = s.row.model_id;
    cells.push_back(std::move(jc));
  }
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  // Wall-clock data lives apart from the manifest so repeated runs produce
  // byte-identical manifests.
  nlohmann::json timings;
  auto& jp = timings["prepare"] = nlohmann::json::array();
  for (const auto& [factor, secs] : prepare_times) {
    jp.push_back({{"f", format_factor(factor)}, {"wall_seconds", secs}});
  }
  auto& jt = timings["cells"] = nlohmann::json::array();
  for (const GridCellStatus& s : result.cells) {
    jt.push_back({{"L", s.sequence_length},
                  {"f", format_factor(s.amplification_factor)},
                  {"wall_seconds", s.wall_seconds}});
  }
  write_file(out_dir / "timings.json", timings.dump(2) + "\n");
  return result;
}

ImpactSummary evaluate_impact(const PreparedData& data,
                              const RecurrentClassifier& model,
                              const NormalizationStats& stats,
                              double mbps_per_prb) {
  const auto benign_stream =
      build_report_stream(data.benign, nullptr, data.topology);
  const auto poisoned_stream =
      build_report_stream(data.poisoned, nullptr, data.topology);
  if (benign_stream.size() != poisoned_stream.size()) {
    throw ShapeError("benign and poisoned streams disagree in shape");
  }

  const TelemetryEmulator emulator(data.emulation);
  std::vector<std::uint32_t> ue_ids;
  for (const UeProfile& p : emulator.population()) {
    ue_ids.push_back(p.ue_id);
  }

  DetectionGate gate({GatePolicy::kDiscardPoisonedAndNotify,
                      ColdStartPolicy::kBenignByDefault},
                     model, stats);
  QosResourceAllocator base_alloc(mbps_per_prb);
  QosResourceAllocator raw_alloc(mbps_per_prb);
  QosResourceAllocator gated_alloc(mbps_per_prb);

  ImpactSummary summary;
  std::size_t i = 0;
  while (i < benign_stream.size()) {
    const std::int64_t period = benign_stream[i].period_start;
    for (; i < benign_stream.size() &&
           benign_stream[i].period_start == period;
         ++i) {
      base_alloc.on_message(benign_stream[i]);
      raw_alloc.on_message(poisoned_stream[i]);
      const GateResult r = gate.process(poisoned_stream[i]);
      if (r.delivered.has_value()) gated_alloc.on_message(*r.delivered);
    }
    double dev_raw = 0.0;
    double dev_gated = 0.0;
    for (std::uint32_t ue : ue_ids) {
      const double base = static_cast<double>(base_alloc.allocation(ue));
      dev_raw += std::abs(static_cast<double>(raw_alloc.allocation(ue)) - base);
      dev_gated +=
          std::abs(static_cast<double>(gated_alloc.allocation(ue)) - base);
    }
    const double n = static_cast<double>(ue_ids.size());
    summary.per_period_ungated.push_back(dev_raw / n);
    summary.per_period_gated.push_back(dev_gated / n);
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0
                     : std::accumulate(v.begin(), v.end(), 0.0) /
                           static_cast<double>(v.size());
  };
  summary.mean_gated = mean(summary.per_period_gated);
  summary.mean_ungated = mean(summary.per_period_ungated);
  return summary;
}

}  // namespace kpiguard
