#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kpiguard/kpi.hpp"

namespace kpiguard {

// Positive class is poisoned throughout.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }

  void add(Label truth, Label predicted) {
    if (truth == Label::kPoisoned) {
      (predicted == Label::kPoisoned ? tp : fn) += 1;
    } else {
      (predicted == Label::kPoisoned ? fp : tn) += 1;
    }
  }
};

// Rates are empty (not NaN) when their denominator is zero.
struct Rates {
  std::optional<double> detection_rate;        // TP / (TP + FN)
  std::optional<double> false_positive_rate;   // FP / (FP + TN)
  std::optional<double> false_negative_rate;   // FN / (TP + FN)
};

Rates compute_metrics(const ConfusionMatrix& cm);

struct MetricsRow {
  int sequence_length = 0;
  double amplification_factor = 0.0;
  ConfusionMatrix cm;
  Rates rates;
  std::uint64_t seed = 0;
  std::string model_id;
};

// "NA" for undefined rates; used by the CSV writers.
std::string rate_to_string(const std::optional<double>& rate);

}  // namespace kpiguard
