#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kpiguard/lstm.hpp"
#include "kpiguard/message.hpp"
#include "kpiguard/window.hpp"

namespace kpiguard {

enum class GatePolicy : std::uint8_t {
  kTagAndForward = 0,
  kDiscardPoisonedAndNotify = 1,
};

// What to do with a UE whose buffer has fewer than L records: report it
// benign, or withhold its records from delivery until the buffer is warm.
enum class ColdStartPolicy : std::uint8_t {
  kBenignByDefault = 0,
  kSuppressUntilWarm = 1,
};

struct GateConfig {
  GatePolicy policy = GatePolicy::kTagAndForward;
  ColdStartPolicy cold_start = ColdStartPolicy::kBenignByDefault;
};

struct UeVerdict {
  std::uint32_t ue_id = 0;
  Label verdict = Label::kBenign;
  double p_poisoned = 0.0;
  bool warm = false;  // false while the UE buffer holds fewer than L records
};

// One attack flag-up line appended to the audit log per dropped record.
struct SmoNotification {
  double wall_time = 0.0;  // seconds since epoch
  std::uint32_t ue_id = 0;
  std::int64_t period_start = 0;
  double verdict_confidence = 0.0;
};

struct GateResult {
  bool bypassed = false;  // OTHER message, never entered detection
  std::optional<KpiReportMessage> delivered;
  std::vector<UeVerdict> verdicts;
  std::vector<SmoNotification> notifications;
  double latency_ms = 0.0;
};

struct LatencySummary {
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Near-RT-RIC ingress gate: receives messages, classifies the per-UE KPI
// windows they complete, tags or filters, and forwards to subscribers. All
// records of one UE flow through its single rolling buffer, so per-UE order
// is preserved end to end.
class DetectionGate {
public:
  DetectionGate(GateConfig config, const RecurrentClassifier& model,
                const NormalizationStats& stats);

  using Subscriber = std::function<void(const KpiReportMessage&)>;
  void subscribe(Subscriber subscriber);

  // Runs the full stage 1-4 pipeline on one decoded message.
  GateResult process(const KpiReportMessage& message);

  // Decodes one wire line first; undecodable input is quarantined (counted
  // and logged) instead of raising.
  std::optional<GateResult> process_line(std::string_view line);

  const std::vector<double>& latencies_ms() const { return latencies_ms_; }
  LatencySummary latency_summary() const;
  const std::vector<SmoNotification>& notifications() const {
    return notifications_;
  }
  const std::vector<std::string>& quarantine_log() const {
    return quarantine_log_;
  }

  // Appends notifications as JSON lines (wall_time, ue_id, period_start,
  // verdict_confidence).
  static void write_audit_log(std::ostream& out,
                              const std::vector<SmoNotification>& notifications);

  int window_length() const { return model_->window_length(); }

private:
  std::vector<UeVerdict> detect(const KpiReportMessage& message);
  GateResult tag_and_forward(const KpiReportMessage& message,
                             std::vector<UeVerdict> verdicts);

  GateConfig config_;
  const RecurrentClassifier* model_;
  const NormalizationStats* stats_;
  std::unordered_map<std::uint32_t, std::deque<Vec6>> buffers_;
  std::vector<Subscriber> subscribers_;
  std::vector<double> latencies_ms_;
  std::vector<SmoNotification> notifications_;
  std::vector<std::string> quarantine_log_;
};

}  // namespace kpiguard
