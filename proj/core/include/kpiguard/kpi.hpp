#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace kpiguard {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr int kNumKpiFeatures = 6;

// Feature column order used everywhere: CSV columns, model inputs, windows.
enum KpiFeature : int {
  kFeatThpUl = 0,
  kFeatPrbUl = 1,
  kFeatThpDl = 2,
  kFeatPrbDl = 3,
  kFeatPktUl = 4,
  kFeatPktDl = 5,
};

inline constexpr std::array<std::string_view, kNumKpiFeatures> kKpiColumnNames = {
    "UEThpUl", "PrbUsedUl", "UEThpDl", "PrbUsedDl",
    "TotNbrUl_per_sec", "TotNbrDl_per_sec"};

// Throughputs are real-valued Mbps; the other four are integer counts.
constexpr bool is_integer_feature(int f) noexcept {
  return f != kFeatThpUl && f != kFeatThpDl;
}

// One per-UE per-second KPI report row.
struct KpiRecord {
  std::int64_t timestamp = 0;  // seconds since emulation start
  std::uint32_t ue_id = 0;
  double ue_thp_ul = 0.0;  // Mbps
  std::int64_t prb_used_ul = 0;
  double ue_thp_dl = 0.0;  // Mbps
  std::int64_t prb_used_dl = 0;
  std::int64_t tot_nbr_ul_per_sec = 0;  // packets/s
  std::int64_t tot_nbr_dl_per_sec = 0;  // packets/s

  Vec6 features() const {
    Vec6 v;
    v << ue_thp_ul, static_cast<double>(prb_used_ul), ue_thp_dl,
        static_cast<double>(prb_used_dl), static_cast<double>(tot_nbr_ul_per_sec),
        static_cast<double>(tot_nbr_dl_per_sec);
    return v;
  }

  // Writes back the six KPI values, rounding integer features to the nearest
  // non-negative integer and clamping throughputs at zero.
  void set_features(const Vec6& v) {
    auto clamp_int = [](double x) {
      return std::max<std::int64_t>(0, std::llround(x));
    };
    ue_thp_ul = std::max(0.0, v[kFeatThpUl]);
    prb_used_ul = clamp_int(v[kFeatPrbUl]);
    ue_thp_dl = std::max(0.0, v[kFeatThpDl]);
    prb_used_dl = clamp_int(v[kFeatPrbDl]);
    tot_nbr_ul_per_sec = clamp_int(v[kFeatPktUl]);
    tot_nbr_dl_per_sec = clamp_int(v[kFeatPktDl]);
  }

  bool operator==(const KpiRecord&) const = default;
};

using Dataset = std::vector<KpiRecord>;

enum class Label : std::uint8_t { kBenign = 0, kPoisoned = 1 };

constexpr std::string_view to_string(Label l) noexcept {
  return l == Label::kBenign ? "benign" : "poisoned";
}

inline bool dataset_is_sorted(const Dataset& d) {
  for (std::size_t i = 1; i < d.size(); ++i) {
    const auto& a = d[i - 1];
    const auto& b = d[i];
    if (a.timestamp > b.timestamp ||
        (a.timestamp == b.timestamp && a.ue_id >= b.ue_id)) {
      return false;
    }
  }
  return true;
}

}  // namespace kpiguard
