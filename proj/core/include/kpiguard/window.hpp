#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "kpiguard/kpi.hpp"

namespace kpiguard {

struct WindowSpec {
  int length = 10;
  int stride = 1;  // the report stream is classified at every second
};

// A classifier input: `length` consecutive per-second reports of one UE.
struct Window {
  std::uint32_t ue_id = 0;
  std::int64_t start_t = 0;
  Eigen::MatrixXd features;  // length x 6, KPI column order
  Label label = Label::kBenign;
};

// All sliding windows per UE over runs of consecutive timestamps. A window is
// labeled poisoned iff any contained record is poisoned. UEs with fewer than
// `length` consecutive records contribute no windows.
std::vector<Window> make_windows(const Dataset& dataset,
                                 const std::vector<Label>& labels,
                                 const WindowSpec& spec);

// Per-feature z-score parameters, fitted on benign training records only.
struct NormalizationStats {
  Vec6 mean = Vec6::Zero();
  Vec6 std = Vec6::Ones();  // floored at 1e-9
};

inline constexpr double kStdFloor = 1e-9;

NormalizationStats fit_normalization(const Dataset& records,
                                     const std::vector<Label>& labels);

Eigen::MatrixXd normalize(const Eigen::MatrixXd& features,
                          const NormalizationStats& stats);
Eigen::MatrixXd denormalize(const Eigen::MatrixXd& features,
                            const NormalizationStats& stats);
Window normalize(const Window& window, const NormalizationStats& stats);

}  // namespace kpiguard
