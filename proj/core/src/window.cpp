#include "kpiguard/window.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kpiguard/error.hpp"

namespace kpiguard {

std::vector<Window> make_windows(const Dataset& dataset,
                                 const std::vector<Label>& labels,
                                 const WindowSpec& spec) {
  if (spec.length < 1) throw ConfigError("window length must be at least 1");
  if (spec.stride < 1) throw ConfigError("window stride must be at least 1");
  if (labels.size() != dataset.size()) {
    throw ShapeError("label count does not match record count");
  }
  if (!dataset_is_sorted(dataset)) {
    throw OrderingError("dataset must be sorted by (timestamp, ue_id)");
  }

  // Per-UE record indices, already timestamp-ordered by the global sort.
  std::map<std::uint32_t, std::vector<std::size_t>> by_ue;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_ue[dataset[i].ue_id].push_back(i);
  }

  const int L = spec.length;
  std::vector<Window> out;
  for (const auto& [ue, indices] : by_ue) {
    // Split into runs of consecutive timestamps; windows never span a gap.
    std::size_t run_start = 0;
    for (std::size_t k = 1; k <= indices.size(); ++k) {
      const bool gap =
          k == indices.size() ||
          dataset[indices[k]].timestamp !=
              dataset[indices[k - 1]].timestamp + 1;
      if (!gap) continue;
      const std::size_t run_len = k - run_start;
      if (run_len >= static_cast<std::size_t>(L)) {
        for (std::size_t w = run_start;
             w + static_cast<std::size_t>(L) <= k;
             w += static_cast<std::size_t>(spec.stride)) {
          Window win;
          win.ue_id = ue;
          win.start_t = dataset[indices[w]].timestamp;
          win.features.resize(L, kNumKpiFeatures);
          win.label = Label::kBenign;
          for (int r = 0; r < L; ++r) {
            const std::size_t idx = indices[w + static_cast<std::size_t>(r)];
            win.features.row(r) = dataset[idx].features().transpose();
            if (labels[idx] == Label::kPoisoned) win.label = Label::kPoisoned;
          }
          out.push_back(std::move(win));
        }
      }
      run_start = k;
    }
  }
  return out;
}

NormalizationStats fit_normalization(const Dataset& records,
                                     const std::vector<Label>& labels) {
  if (labels.size() != records.size()) {
    throw ShapeError("label count does not match record count");
  }
  Vec6 sum = Vec6::Zero();
  Vec6 sum_sq = Vec6::Zero();
  std::int64_t n = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (labels[i] != Label::kBenign) continue;
    const Vec6 f = records[i].features();
    sum += f;
    sum_sq += f.cwiseProduct(f);
    ++n;
  }
  if (n == 0) {
    throw InsufficientDataError(
        "normalization needs at least one benign training record");
  }
  NormalizationStats stats;
  stats.mean = sum / static_cast<double>(n);
  if (n > 1) {
    const Vec6 var = (sum_sq - static_cast<double>(n) *
                                   stats.mean.cwiseProduct(stats.mean)) /
                     static_cast<double>(n - 1);
    stats.std = var.cwiseMax(0.0).cwiseSqrt();
  } else {
    stats.std = Vec6::Zero();
  }
  stats.std = stats.std.cwiseMax(kStdFloor);
  return stats;
}

Eigen::MatrixXd normalize(const Eigen::MatrixXd& features,
                          const NormalizationStats& stats) {
  Eigen::MatrixXd out = features;
  out.rowwise() -= stats.mean.transpose();
  out.array().rowwise() /= stats.std.transpose().array();
  return out;
}

Eigen::MatrixXd denormalize(const Eigen::MatrixXd& features,
                            const NormalizationStats& stats) {
  Eigen::MatrixXd out = features;
  out.array().rowwise() *= stats.std.transpose().array();
  out.rowwise() += stats.mean.transpose();
  return out;
}

Window normalize(const Window& window, const NormalizationStats& stats) {
  Window out = window;
  out.features = normalize(window.features, stats);
  return out;
}

}  // namespace kpiguard
