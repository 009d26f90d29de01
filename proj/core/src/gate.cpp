#include "kpiguard/gate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

double wall_time_s() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size())));
  return values[std::min(values.size() - 1, std::max<std::size_t>(1, rank) - 1)];
}

}  // namespace

DetectionGate::DetectionGate(GateConfig config,
                             const RecurrentClassifier& model,
                             const NormalizationStats& stats)
    : config_(config), model_(&model), stats_(&stats) {}

void DetectionGate::subscribe(Subscriber subscriber) {
  subscribers_.push_back(std::move(subscriber));
}

std::vector<UeVerdict> DetectionGate::detect(const KpiReportMessage& message) {
  const int length = model_->window_length();
  std::vector<UeVerdict> verdicts;
  verdicts.reserve(message.records.size());

  // Append every record to its UE buffer, then classify the warm windows of
  // this message in one batched forward pass.
  std::vector<Window> warm_windows;
  std::vector<std::size_t> warm_slots;
  for (const KpiRecord& record : message.records) {
    auto& buffer = buffers_[record.ue_id];
    buffer.push_back(record.features());
    if (buffer.size() > static_cast<std::size_t>(length)) buffer.pop_front();

    UeVerdict v;
    v.ue_id = record.ue_id;
    if (buffer.size() == static_cast<std::size_t>(length)) {
      v.warm = true;
      Window w;
      w.ue_id = record.ue_id;
      w.start_t = record.timestamp - length + 1;
      w.features.resize(length, kNumKpiFeatures);
      for (int r = 0; r < length; ++r) {
        w.features.row(r) = buffer[static_cast<std::size_t>(r)].transpose();
      }
      warm_slots.push_back(verdicts.size());
      warm_windows.push_back(std::move(w));
    } else {
      // Cold start: report benign until L records exist.
      v.verdict = Label::kBenign;
      v.p_poisoned = 0.0;
    }
    verdicts.push_back(v);
  }

  if (!warm_windows.empty()) {
    const Eigen::MatrixXd probs = infer_batch(*model_, warm_windows, *stats_);
    for (std::size_t k = 0; k < warm_slots.size(); ++k) {
      UeVerdict& v = verdicts[warm_slots[k]];
      v.p_poisoned = probs(static_cast<Eigen::Index>(k), 1);
      v.verdict =
          v.p_poisoned >= 0.5 ? Label::kPoisoned : Label::kBenign;
    }
  }
  return verdicts;
}

GateResult DetectionGate::tag_and_forward(const KpiReportMessage& message,
                                          std::vector<UeVerdict> verdicts) {
  GateResult result;
  const bool any_poisoned =
      std::any_of(verdicts.begin(), verdicts.end(), [](const UeVerdict& v) {
        return v.verdict == Label::kPoisoned;
      });

  KpiReportMessage delivered = message;
  delivered.tag = any_poisoned ? MsgTag::kPoisoned : MsgTag::kBenign;

  if (config_.policy == GatePolicy::kDiscardPoisonedAndNotify) {
    std::vector<KpiRecord> kept;
    kept.reserve(message.records.size());
    for (std::size_t i = 0; i < message.records.size(); ++i) {
      const UeVerdict& v = verdicts[i];
      if (v.verdict == Label::kPoisoned) {
        SmoNotification note{wall_time_s(), v.ue_id, message.period_start,
                             v.p_poisoned};
        notifications_.push_back(note);
        result.notifications.push_back(note);
        continue;
      }
      if (!v.warm &&
          config_.cold_start == ColdStartPolicy::kSuppressUntilWarm) {
        continue;  // withheld, not an attack flag
      }
      kept.push_back(message.records[i]);
    }
    delivered.records = std::move(kept);
    delivered.tag = MsgTag::kBenign;  // the remainder passed detection
  }

  for (const Subscriber& s : subscribers_) s(delivered);
  result.delivered = std::move(delivered);
  result.verdicts = std::move(verdicts);
  return result;
}

GateResult DetectionGate::process(const KpiReportMessage& message) {
  const auto t0 = std::chrono::steady_clock::now();
  GateResult result;

  if (message.msg_type != MsgType::kKpiReport) {
    // Stage 2 bypass: no KPI reports, forward untouched.
    result.bypassed = true;
    for (const Subscriber& s : subscribers_) s(message);
    result.delivered = message;
  } else {
    result = tag_and_forward(message, detect(message));
  }

  const auto t1 = std::chrono::steady_clock::now();
  result.latency_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  latencies_ms_.push_back(result.latency_ms);
  return result;
}

std::optional<GateResult> DetectionGate::process_line(std::string_view line) {
  KpiReportMessage message;
  try {
    message = decode_message(line);
  } catch (const Error& e) {
    quarantine_log_.push_back(std::string(e.what()));
    return std::nullopt;
  }
  return process(message);
}

LatencySummary DetectionGate::latency_summary() const {
  LatencySummary s;
  s.count = latencies_ms_.size();
  if (latencies_ms_.empty()) return s;
  s.p50 = percentile(latencies_ms_, 0.50);
  s.p95 = percentile(latencies_ms_, 0.95);
  s.max = *std::max_element(latencies_ms_.begin(), latencies_ms_.end());
  return s;
}

void DetectionGate::write_audit_log(
    std::ostream& out, const std::vector<SmoNotification>& notifications) {
  for (const SmoNotification& n : notifications) {
    nlohmann::json j;
    j["wall_time"] = n.wall_time;
    j["ue_id"] = n.ue_id;
    j["period_start"] = n.period_start;
    j["verdict_confidence"] = n.verdict_confidence;
    out << j.dump() << '\n';
  }
}

}  // namespace kpiguard
