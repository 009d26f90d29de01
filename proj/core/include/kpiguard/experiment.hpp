#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kpiguard/attack.hpp"
#include "kpiguard/emulator.hpp"
#include "kpiguard/gate.hpp"
#include "kpiguard/lstm.hpp"
#include "kpiguard/metrics.hpp"
#include "kpiguard/train.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

// Everything one experiment needs; doubles as the CLI config file schema.
struct ExperimentConfig {
  EmulationConfig emulation;
  PlanParams attack;
  TrainConfig train;
  ClassifierArch arch;
  WindowSpec window;  // length used by the single-cell train/evaluate path
  std::vector<int> sequence_lengths = {1, 2, 5, 10, 15, 20};
  std::vector<double> amplification_factors = {1.2, 1.3, 1.4, 1.5};
  double split_fraction = 0.7;   // per-UE chronological train/test split
  std::size_t max_train_windows = 0;  // 0 = train on every window
  double baseline_quantile = 0.99;
  GateConfig gate;
  double replay_speedup = std::numeric_limits<double>::infinity();
  double xapp_mbps_per_prb = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Emulated + poisoned data for one amplification factor, shared by every
// sequence length of that factor so DR differences across lengths come from
// the detector, not from re-drawn traffic.
struct PreparedData {
  EmulationConfig emulation;  // seed already derived from (config.seed, f)
  Topology topology;
  Dataset benign;
  Dataset poisoned;
  std::vector<Label> labels;
  AttackPlan plan;
  std::int64_t split_t = 0;  // first test-split timestamp
};

PreparedData prepare_data(const ExperimentConfig& config, double factor);

// View of the chronological split.
struct SplitData {
  Dataset train_records;
  std::vector<Label> train_labels;
  Dataset test_records;
  std::vector<Label> test_labels;
};
SplitData split_by_time(const Dataset& dataset, const std::vector<Label>& labels,
                        std::int64_t split_t);

struct CellResult {
  int sequence_length = 0;
  double amplification_factor = 0.0;
  NormalizationStats stats;
  RecurrentClassifier model;
  TrainReport train_report;
  MetricsRow metrics;
};

// Full pipeline for one grid cell: normalization fit, window building,
// deterministic training subsample, training, held-out evaluation.
CellResult run_cell(const ExperimentConfig& config, const PreparedData& data,
                    int sequence_length);
CellResult run_cell(const ExperimentConfig& config, int sequence_length,
                    double factor);

// Classifies raw windows in batches against ground-truth labels.
ConfusionMatrix evaluate_windows(const RecurrentClassifier& model,
                                 const NormalizationStats& stats,
                                 const std::vector<Window>& windows);

struct GridCellStatus {
  int sequence_length = 0;
  double amplification_factor = 0.0;
  bool ok = false;
  std::string error;  // stage-tagged when !ok
  MetricsRow row;
  double wall_seconds = 0.0;
};

struct GridResult {
  std::vector<GridCellStatus> cells;
  bool all_ok = true;
};

// Runs every (length, factor) cell, continuing past per-cell failures, and
// writes metrics.csv, plotdata.csv, per-cell confusion matrices,
// manifest.json (deterministic) and timings.json (wall clock) to out_dir.
GridResult run_grid(const ExperimentConfig& config,
                    const std::filesystem::path& out_dir);

// xApp PRB-allocation deviation from the no-attack baseline, per reporting
// period, with the gate filtering (DISCARD policy) and without any gate.
struct ImpactSummary {
  std::vector<double> per_period_gated;
  std::vector<double> per_period_ungated;
  double mean_gated = 0.0;
  double mean_ungated = 0.0;
};

ImpactSummary evaluate_impact(const PreparedData& data,
                              const RecurrentClassifier& model,
                              const NormalizationStats& stats,
                              double mbps_per_prb);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string plotdata_csv(const std::vector<MetricsRow>& rows);
std::string confusion_csv(const ConfusionMatrix& cm);
std::string format_factor(double factor);  // short stable form, e.g. "1.2"

}  // namespace kpiguard
