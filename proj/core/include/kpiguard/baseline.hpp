#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "kpiguard/kpi.hpp"
#include "kpiguard/mvn.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

// Statistical reference detector: per-UE benign normal models plus a single
// threshold set at a quantile of benign training-window scores. Serves as an
// independent check on the trained classifier.
struct BaselineDetector {
  std::unordered_map<std::uint32_t, MvnModel> ue_models;
  double threshold = 0.0;
  double quantile = 0.99;
};

// Mean Mahalanobis distance of the window rows under the UE's benign model.
double baseline_score(const MvnModel& model,
                      const Eigen::MatrixXd& window_features);

// Fits one model per UE on its benign training records and sets the threshold
// at the given quantile of the benign training windows' scores.
BaselineDetector fit_baseline(const Dataset& train_records,
                              const std::vector<Label>& train_labels,
                              int window_length, double quantile = 0.99);

// Poisoned iff the window's score exceeds the threshold. Throws PlanError for
// a UE without a fitted model.
Label baseline_classify(const BaselineDetector& detector, const Window& window);

// Nearest-rank quantile of a sample (q in (0, 1]).
double quantile_of(std::vector<double> values, double q);

}  // namespace kpiguard
