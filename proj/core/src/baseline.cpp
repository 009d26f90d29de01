#include "kpiguard/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kpiguard/error.hpp"

namespace kpiguard {

double baseline_score(const MvnModel& model,
                      const Eigen::MatrixXd& window_features) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < window_features.rows(); ++r) {
    total += mahalanobis(model, window_features.row(r).transpose());
  }
  return total / static_cast<double>(window_features.rows());
}

double quantile_of(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientDataError("quantile of empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("quantile must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size())));
  return values[std::min(values.size() - 1, std::max<std::size_t>(1, rank) - 1)];
}

BaselineDetector fit_baseline(const Dataset& train_records,
                              const std::vector<Label>& train_labels,
                              int window_length, double quantile) {
  if (train_labels.size() != train_records.size()) {
    throw ShapeError("label count does not match record count");
  }
  std::map<std::uint32_t, std::vector<KpiRecord>> benign_by_ue;
  for (std::size_t i = 0; i < train_records.size(); ++i) {
    if (train_labels[i] == Label::kBenign) {
      benign_by_ue[train_records[i].ue_id].push_back(train_records[i]);
    }
  }
  BaselineDetector detector;
  detector.quantile = quantile;
  for (const auto& [ue, records] : benign_by_ue) {
    detector.ue_models.emplace(ue, fit_mvn(records));
  }

  // Threshold from benign training windows only.
  const auto windows =
      make_windows(train_records, train_labels, WindowSpec{window_length, 1});
  std::vector<double> scores;
  scores.reserve(windows.size());
  for (const Window& w : windows) {
    if (w.label != Label::kBenign) continue;
    scores.push_back(baseline_score(detector.ue_models.at(w.ue_id), w.features));
  }
  if (scores.empty()) {
    throw InsufficientDataError("no benign training windows for the threshold");
  }
  detector.threshold = quantile_of(std::move(scores), quantile);
  if (!(detector.threshold > 0.0) || !std::isfinite(detector.threshold)) {
    throw NumericError("baseline threshold must be finite and positive");
  }
  return detector;
}

Label baseline_classify(const BaselineDetector& detector,
                        const Window& window) {
  auto it = detector.ue_models.find(window.ue_id);
  if (it == detector.ue_models.end()) {
    throw PlanError("no baseline model for UE " + std::to_string(window.ue_id));
  }
  return baseline_score(it->second, window.features) > detector.threshold
             ? Label::kPoisoned
             : Label::kBenign;
}

}  // namespace kpiguard
