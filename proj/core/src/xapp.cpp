#include "kpiguard/xapp.hpp"

#include <algorithm>
#include <cmath>

#include "kpiguard/error.hpp"

namespace kpiguard {

QosResourceAllocator::QosResourceAllocator(double mbps_per_prb)
    : mbps_per_prb_(mbps_per_prb) {
  if (!(mbps_per_prb > 0.0)) {
    throw ConfigError("Mbps-per-PRB must be positive");
  }
}

std::int64_t QosResourceAllocator::allocate_step(double thp_sum_mbps,
                                                 std::int64_t prb_usage,
                                                 std::int64_t assigned,
                                                 double mbps_per_prb) {
  const auto target = static_cast<std::int64_t>(
      std::ceil(thp_sum_mbps / mbps_per_prb));
  if (target > assigned) {
    assigned = target;
  }
  if (prb_usage < assigned) {
    assigned = std::max(target, prb_usage);
  }
  return std::max<std::int64_t>(0, assigned);
}

void QosResourceAllocator::on_record(const KpiRecord& record) {
  std::int64_t& assigned = assigned_[record.ue_id];
  assigned = allocate_step(record.ue_thp_dl + record.ue_thp_ul,
                           record.prb_used_dl + record.prb_used_ul, assigned,
                           mbps_per_prb_);
}

void QosResourceAllocator::on_message(const KpiReportMessage& message) {
  for (const KpiRecord& record : message.records) on_record(record);
}

std::int64_t QosResourceAllocator::allocation(std::uint32_t ue_id) const {
  auto it = assigned_.find(ue_id);
  return it == assigned_.end() ? 0 : it->second;
}

}  // namespace kpiguard
