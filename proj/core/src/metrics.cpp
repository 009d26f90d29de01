#include "kpiguard/metrics.hpp"

#include <cstdio>

namespace kpiguard {

Rates compute_metrics(const ConfusionMatrix& cm) {
  Rates r;
  const double positives = static_cast<double>(cm.tp + cm.fn);
  const double negatives = static_cast<double>(cm.fp + cm.tn);
  if (positives > 0) {
    r.detection_rate = static_cast<double>(cm.tp) / positives;
    r.false_negative_rate = static_cast<double>(cm.fn) / positives;
  }
  if (negatives > 0) {
    r.false_positive_rate = static_cast<double>(cm.fp) / negatives;
  }
  return r;
}

std::string rate_to_string(const std::optional<double>& rate) {
  if (!rate.has_value()) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *rate);
  return buf;
}

}  // namespace kpiguard
