#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kpiguard/kpi.hpp"
#include "kpiguard/topology.hpp"

namespace kpiguard {

enum class MsgType : std::uint8_t { kKpiReport = 0, kOther = 1 };
enum class MsgTag : std::uint8_t { kUntagged = 0, kBenign = 1, kPoisoned = 2 };

constexpr const char* to_string(MsgType t) noexcept {
  return t == MsgType::kKpiReport ? "KPI_REPORT" : "OTHER";
}
constexpr const char* to_string(MsgTag t) noexcept {
  switch (t) {
    case MsgTag::kBenign: return "benign";
    case MsgTag::kPoisoned: return "poisoned";
    default: return "untagged";
  }
}

// One wire message from an E2 node: the KPI reports of the UEs an O-DU served
// during one reporting period. OTHER models non-report traffic that must
// bypass detection.
struct KpiReportMessage {
  MsgType msg_type = MsgType::kKpiReport;
  std::string source_node;
  std::int64_t period_start = 0;
  std::vector<KpiRecord> records;  // all share period_start as timestamp
  MsgTag tag = MsgTag::kUntagged;

  bool operator==(const KpiReportMessage&) const = default;
};

// One JSON object per line, record fields named exactly as the dataset
// columns. Unknown fields are rejected; OTHER messages must carry no records.
std::string encode_message(const KpiReportMessage& msg);
KpiReportMessage decode_message(std::string_view line);

// Groups a sorted dataset into per-(timestamp, O-DU) messages in timestamp
// order, O-DUs in topology order within a period. When labels are given,
// messages are tagged poisoned iff they contain a poisoned record, benign
// otherwise; without labels they stay untagged.
std::vector<KpiReportMessage> build_report_stream(
    const Dataset& dataset, const std::vector<Label>* labels,
    const Topology& topology);

// Pull-based replay with optional pacing: consecutive reporting periods are
// separated by report_period / speedup seconds of wall time; an infinite
// speedup never sleeps.
class ReplayStream {
public:
  ReplayStream(std::vector<KpiReportMessage> messages, double speedup,
               std::int64_t report_period_s = 1);

  // Returns false when the stream is exhausted.
  bool next(KpiReportMessage& out);

  std::size_t remaining() const { return messages_.size() - pos_; }

private:
  std::vector<KpiReportMessage> messages_;
  std::size_t pos_ = 0;
  double speedup_;
  std::int64_t report_period_s_;
  std::int64_t last_period_ = -1;
};

}  // namespace kpiguard
