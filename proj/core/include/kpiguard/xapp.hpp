#pragma once

#include <cstdint>
#include <unordered_map>

#include "kpiguard/message.hpp"

namespace kpiguard {

// Toy QoS resource-allocation consumer: one PRB per X Mbps of combined
// UL+DL throughput. A UE whose report was discarded by the gate simply sends
// nothing this period, so its allocation holds.
class QosResourceAllocator {
public:
  explicit QosResourceAllocator(double mbps_per_prb = 10.0);

  // Applies the allocation rule for one record.
  void on_record(const KpiRecord& record);
  void on_message(const KpiReportMessage& message);

  std::int64_t allocation(std::uint32_t ue_id) const;
  const std::unordered_map<std::uint32_t, std::int64_t>& allocations() const {
    return assigned_;
  }

  // Pure allocation rule: raise to the throughput target, otherwise shrink
  // toward it when observed PRB usage is below the current assignment.
  static std::int64_t allocate_step(double thp_sum_mbps, std::int64_t prb_usage,
                                    std::int64_t assigned, double mbps_per_prb);

private:
  double mbps_per_prb_;
  std::unordered_map<std::uint32_t, std::int64_t> assigned_;
};

}  // namespace kpiguard
