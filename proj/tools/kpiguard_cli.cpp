// kpiguard command line: emulate KPI streams, inject KPI-poisoning attacks,
// train/evaluate the detector, sweep the (sequence length x amplification
// factor) grid, and replay poisoned streams through the detection gate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kpiguard/attack.hpp"
#include "kpiguard/baseline.hpp"
#include "kpiguard/checkpoint.hpp"
#include "kpiguard/config.hpp"
#include "kpiguard/dataset_io.hpp"
#include "kpiguard/error.hpp"
#include "kpiguard/experiment.hpp"
#include "kpiguard/gate.hpp"
#include "kpiguard/message.hpp"
#include "kpiguard/xapp.hpp"

namespace fs = std::filesystem;
using namespace kpiguard;

namespace {

struct CommonOpts {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--seed", opts.seed, "overrides the config seed");
  cmd->add_option("--out", opts.out_dir, "output directory");
}

ExperimentConfig effective_config(const CommonOpts& opts) {
  ExperimentConfig config = opts.config_path.has_value()
                                ? load_experiment_config(*opts.config_path)
                                : ExperimentConfig{};
  if (opts.seed.has_value()) config.seed = *opts.seed;
  config.validate();
  return config;
}

fs::path ensure_out_dir(const CommonOpts& opts) {
  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

// The emulation seed used by `emulate` and re-derived by `poison`, so the two
// commands compose without sharing files beyond the dataset CSV.
EmulationConfig emulation_for(const ExperimentConfig& config) {
  EmulationConfig emu = config.emulation;
  emu.seed = derive_seed(config.seed, 0x41);
  return emu;
}

int cmd_emulate(const CommonOpts& opts) {
  const ExperimentConfig config = effective_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  const Dataset dataset = emulate(emulation_for(config));
  save_dataset(dir / "dataset.csv", dataset);
  std::printf("emulate: wrote %zu records to %s\n", dataset.size(),
              (dir / "dataset.csv").c_str());
  return 0;
}

int cmd_poison(const CommonOpts& opts, const std::string& data_path) {
  const ExperimentConfig config = effective_config(opts);
  const fs::path dir = ensure_out_dir(opts);

  const EmulationConfig emu_cfg = emulation_for(config);
  TelemetryEmulator emulator(emu_cfg);
  Dataset dataset;
  if (data_path.empty()) {
    dataset = emulator.run();
  } else {
    auto decoded = load_dataset(data_path);
    dataset = std::move(decoded.records);
  }

  const AttackPlan plan =
      make_plan(emulator.population(), emu_cfg.duration_s, config.attack,
                derive_seed(config.seed, 0x42));
  const auto [poisoned, labels] = poison(dataset, plan);
  save_dataset(dir / "poisoned.csv", poisoned, &labels);
  save_plan(dir / "plan.json", plan);
  std::size_t n_poisoned = 0;
  for (Label l : labels) n_poisoned += l == Label::kPoisoned ? 1 : 0;
  std::printf("poison: %zu of %zu records poisoned (f=%s), plan at %s\n",
              n_poisoned, poisoned.size(),
              format_factor(plan.amplification_factor).c_str(),
              (dir / "plan.json").c_str());
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_path,
              int length_flag) {
  ExperimentConfig config = effective_config(opts);
  if (length_flag > 0) config.window.length = length_flag;
  const fs::path dir = ensure_out_dir(opts);

  const auto decoded = load_dataset(data_path);
  if (!decoded.labels.has_value()) {
    throw FormatError("training data needs the Label column (use `poison`)");
  }
  const std::vector<Label>& labels = *decoded.labels;

  const auto split_t = static_cast<std::int64_t>(
      static_cast<double>(config.emulation.duration_s) * config.split_fraction);
  const SplitData split = split_by_time(decoded.records, labels, split_t);
  const NormalizationStats stats =
      fit_normalization(split.train_records, split.train_labels);

  std::vector<Window> windows = make_windows(split.train_records,
                                             split.train_labels,
                                             {config.window.length, 1});
  for (Window& w : windows) w.features = normalize(w.features, stats);

  TrainConfig tconf = config.train;
  tconf.seed = derive_seed(config.seed, 0x43,
                           static_cast<std::uint64_t>(config.window.length));
  TrainReport report;
  const RecurrentClassifier model = train(windows, config.arch, tconf, &report);
  save_checkpoint(dir / "model.ckpt", model, stats, tconf);
  std::printf("train: L=%d, %zu windows, final epoch loss %.6f, model at %s\n",
              config.window.length, report.n_windows,
              report.epoch_mean_loss.empty() ? 0.0
                                             : report.epoch_mean_loss.back(),
              (dir / "model.ckpt").c_str());
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& data_path,
                 const std::string& model_path, int length_flag) {
  const ExperimentConfig config = effective_config(opts);
  const fs::path dir = ensure_out_dir(opts);

  const ModelCheckpoint ckpt = load_checkpoint(model_path);
  if (length_flag > 0 && length_flag != ckpt.model.window_length()) {
    throw ShapeError("checkpoint was trained at L=" +
                     std::to_string(ckpt.model.window_length()) +
                     " but L=" + std::to_string(length_flag) + " was requested");
  }
  const int length = ckpt.model.window_length();

  const auto decoded = load_dataset(data_path);
  if (!decoded.labels.has_value()) {
    throw FormatError("evaluation data needs the Label column");
  }
  const auto split_t = static_cast<std::int64_t>(
      static_cast<double>(config.emulation.duration_s) * config.split_fraction);
  const SplitData split =
      split_by_time(decoded.records, *decoded.labels, split_t);
  const auto windows =
      make_windows(split.test_records, split.test_labels, {length, 1});

  MetricsRow row;
  row.sequence_length = length;
  row.amplification_factor = config.attack.amplification_factor;
  row.cm = evaluate_windows(ckpt.model, ckpt.stats, windows);
  row.rates = compute_metrics(row.cm);
  row.seed = config.seed;
  row.model_id = fs::path(model_path).stem().string();

  write_text(dir / "metrics.csv", metrics_csv({row}));
  write_text(dir / ("cm_L" + std::to_string(length) + "_f" +
                    format_factor(row.amplification_factor) + ".csv"),
             confusion_csv(row.cm));
  std::printf("evaluate: %lld windows, DR=%s FPR=%s FNR=%s\n",
              static_cast<long long>(row.cm.total()),
              rate_to_string(row.rates.detection_rate).c_str(),
              rate_to_string(row.rates.false_positive_rate).c_str(),
              rate_to_string(row.rates.false_negative_rate).c_str());
  return 0;
}

int cmd_sweep(const CommonOpts& opts) {
  const ExperimentConfig config = effective_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  const GridResult result = run_grid(config, dir);
  for (const GridCellStatus& cell : result.cells) {
    std::printf("sweep: L=%d f=%s %s%s\n", cell.sequence_length,
                format_factor(cell.amplification_factor).c_str(),
                cell.ok ? "DR=" : "FAILED: ",
                cell.ok ? rate_to_string(cell.row.rates.detection_rate).c_str()
                        : cell.error.c_str());
  }
  if (!result.all_ok) {
    std::fprintf(stderr, "sweep: one or more cells failed\n");
    return 1;
  }
  std::printf("sweep: wrote metrics.csv, plotdata.csv, manifest.json to %s\n",
              dir.c_str());
  return 0;
}

int cmd_gate_replay(const CommonOpts& opts, const std::string& data_path,
                    const std::string& model_path,
                    const std::string& baseline_path,
                    const std::string& policy_flag, double speedup_flag) {
  ExperimentConfig config = effective_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  if (policy_flag == "tag") {
    config.gate.policy = GatePolicy::kTagAndForward;
  } else if (policy_flag == "discard") {
    config.gate.policy = GatePolicy::kDiscardPoisonedAndNotify;
  } else if (!policy_flag.empty()) {
    throw ConfigError("unknown --policy (want tag|discard)");
  }
  const double speedup =
      speedup_flag > 0.0 ? speedup_flag : config.replay_speedup;

  const ModelCheckpoint ckpt = load_checkpoint(model_path);
  const auto decoded = load_dataset(data_path);
  const Topology topology = build_topology(config.emulation);

  const std::vector<Label>* labels =
      decoded.labels.has_value() ? &*decoded.labels : nullptr;
  auto messages = build_report_stream(decoded.records, labels, topology);

  DetectionGate gate(config.gate, ckpt.model, ckpt.stats);
  QosResourceAllocator xapp(config.xapp_mbps_per_prb);
  std::ofstream delivered(dir / "delivered.jsonl", std::ios::binary);
  gate.subscribe([&](const KpiReportMessage& m) {
    xapp.on_message(m);
    delivered << encode_message(m) << '\n';
  });

  ReplayStream replay(std::move(messages), speedup,
                      config.emulation.report_period_s);
  KpiReportMessage msg;
  std::size_t n = 0;
  while (replay.next(msg)) {
    gate.process(msg);
    ++n;
  }

  const LatencySummary lat = gate.latency_summary();
  char buf[160];
  std::snprintf(buf, sizeof(buf), "p50_ms,p95_ms,max_ms,messages\n%.3f,%.3f,%.3f,%zu\n",
                lat.p50, lat.p95, lat.max, lat.count);
  write_text(dir / "latency.csv", buf);

  std::ofstream audit(dir / "notifications.jsonl", std::ios::binary);
  DetectionGate::write_audit_log(audit, gate.notifications());

  // Impact against the no-attack baseline when one is supplied.
  if (!baseline_path.empty()) {
    const auto benign = load_dataset(baseline_path);
    PreparedData data;
    data.emulation = config.emulation;
    data.topology = topology;
    data.benign = benign.records;
    data.poisoned = decoded.records;
    data.labels = labels != nullptr
                      ? *labels
                      : std::vector<Label>(decoded.records.size(), Label::kBenign);
    data.plan.amplification_factor = config.attack.amplification_factor;
    const ImpactSummary impact =
        evaluate_impact(data, ckpt.model, ckpt.stats, config.xapp_mbps_per_prb);
    std::string csv = "period,gated_mean_abs_dev,ungated_mean_abs_dev\n";
    char row[96];
    for (std::size_t t = 0; t < impact.per_period_gated.size(); ++t) {
      std::snprintf(row, sizeof(row), "%zu,%.6f,%.6f\n", t,
                    impact.per_period_gated[t], impact.per_period_ungated[t]);
      csv += row;
    }
    write_text(dir / "impact.csv", csv);
    std::printf("gate-replay: mean |dPRB| gated %.4f vs ungated %.4f\n",
                impact.mean_gated, impact.mean_ungated);
  }

  std::printf(
      "gate-replay: %zu messages, p95 latency %.3f ms, %zu notifications\n", n,
      lat.p95, gate.notifications().size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KPI poisoning testbed and detection gate"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_path, model_path, baseline_path, policy_flag;
  int length_flag = 0;
  double speedup_flag = 0.0;

  auto* emulate_cmd =
      app.add_subcommand("emulate", "generate a benign KPI dataset");
  add_common(emulate_cmd, opts);

  auto* poison_cmd = app.add_subcommand(
      "poison", "inject amplified-MVN poisoning into a dataset");
  add_common(poison_cmd, opts);
  poison_cmd->add_option("--data", data_path,
                         "benign dataset CSV (defaults to re-emulating)");

  auto* train_cmd =
      app.add_subcommand("train", "train the recurrent detector");
  add_common(train_cmd, opts);
  train_cmd->add_option("--data", data_path, "labeled dataset CSV")->required();
  train_cmd->add_option("--length", length_flag, "window length L");

  auto* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a checkpoint on labeled data");
  add_common(eval_cmd, opts);
  eval_cmd->add_option("--data", data_path, "labeled dataset CSV")->required();
  eval_cmd->add_option("--model", model_path, "model checkpoint")->required();
  eval_cmd->add_option("--length", length_flag,
                       "expected window length (errors on mismatch)");

  auto* sweep_cmd = app.add_subcommand(
      "sweep", "run the full (sequence length x factor) grid");
  add_common(sweep_cmd, opts);

  auto* replay_cmd = app.add_subcommand(
      "gate-replay", "stream a dataset through the detection gate");
  add_common(replay_cmd, opts);
  replay_cmd->add_option("--data", data_path, "dataset CSV to replay")
      ->required();
  replay_cmd->add_option("--model", model_path, "model checkpoint")->required();
  replay_cmd->add_option("--baseline", baseline_path,
                         "benign dataset CSV for the impact comparison");
  replay_cmd->add_option("--policy", policy_flag, "tag|discard");
  replay_cmd->add_option("--speedup", speedup_flag,
                         "replay speedup (default: config value)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (emulate_cmd->parsed()) return cmd_emulate(opts);
    if (poison_cmd->parsed()) return cmd_poison(opts, data_path);
    if (train_cmd->parsed()) return cmd_train(opts, data_path, length_flag);
    if (eval_cmd->parsed()) {
      return cmd_evaluate(opts, data_path, model_path, length_flag);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(opts);
    if (replay_cmd->parsed()) {
      return cmd_gate_replay(opts, data_path, model_path, baseline_path,
                             policy_flag, speedup_flag);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "kpiguard %s: %s\n",
                 app.get_subcommands().front()->get_name().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kpiguard: unexpected error: %s\n", e.what());
    return 2;
  }
  return 0;
}
