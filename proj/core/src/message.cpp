#include "kpiguard/message.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "json.hpp"

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

nlohmann::json record_to_json(const KpiRecord& r) {
  nlohmann::json j;
  j["Timestamp"] = r.timestamp;
  j["UEid"] = r.ue_id;
  j["UEThpUl"] = r.ue_thp_ul;
  j["PrbUsedUl"] = r.prb_used_ul;
  j["UEThpDl"] = r.ue_thp_dl;
  j["PrbUsedDl"] = r.prb_used_dl;
  j["TotNbrUl_per_sec"] = r.tot_nbr_ul_per_sec;
  j["TotNbrDl_per_sec"] = r.tot_nbr_dl_per_sec;
  return j;
}

KpiRecord record_from_json(const nlohmann::json& j) {
  static const char* known[] = {"Timestamp", "UEid", "UEThpUl", "PrbUsedUl",
                                "UEThpDl", "PrbUsedDl", "TotNbrUl_per_sec",
                                "TotNbrDl_per_sec"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw FormatError("unknown record field: " + it.key());
  }
  KpiRecord r;
  r.timestamp = j.at("Timestamp").get<std::int64_t>();
  r.ue_id = j.at("UEid").get<std::uint32_t>();
  r.ue_thp_ul = j.at("UEThpUl").get<double>();
  r.prb_used_ul = j.at("PrbUsedUl").get<std::int64_t>();
  r.ue_thp_dl = j.at("UEThpDl").get<double>();
  r.prb_used_dl = j.at("PrbUsedDl").get<std::int64_t>();
  r.tot_nbr_ul_per_sec = j.at("TotNbrUl_per_sec").get<std::int64_t>();
  r.tot_nbr_dl_per_sec = j.at("TotNbrDl_per_sec").get<std::int64_t>();
  if (r.ue_thp_ul < 0 || r.ue_thp_dl < 0 || r.prb_used_ul < 0 ||
      r.prb_used_dl < 0 || r.tot_nbr_ul_per_sec < 0 ||
      r.tot_nbr_dl_per_sec < 0) {
    throw DomainError("record has negative KPI values");
  }
  return r;
}

}  // namespace

std::string encode_message(const KpiReportMessage& msg) {
  if (msg.msg_type == MsgType::kOther && !msg.records.empty()) {
    throw FormatError("OTHER messages must not carry records");
  }
  nlohmann::json j;
  j["msg_type"] = to_string(msg.msg_type);
  j["source_node"] = msg.source_node;
  j["period_start"] = msg.period_start;
  auto& records = j["records"] = nlohmann::json::array();
  for (const KpiRecord& r : msg.records) {
    if (r.timestamp != msg.period_start) {
      throw FormatError("record timestamp differs from period_start");
    }
    records.push_back(record_to_json(r));
  }
  j["tag"] = to_string(msg.tag);
  return j.dump();
}

KpiReportMessage decode_message(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid message JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("message is not a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "msg_type" && k != "source_node" && k != "period_start" &&
        k != "records" && k != "tag") {
      throw FormatError("unknown message field: " + k);
    }
  }
  if (!j.contains("msg_type")) throw FormatError("missing msg_type");

  KpiReportMessage msg;
  try {
    const std::string type = j.at("msg_type").get<std::string>();
    if (type == "KPI_REPORT") {
      msg.msg_type = MsgType::kKpiReport;
    } else if (type == "OTHER") {
      msg.msg_type = MsgType::kOther;
    } else {
      throw FormatError("unknown msg_type: " + type);
    }
    msg.source_node = j.value("source_node", std::string());
    msg.period_start = j.value("period_start", std::int64_t{0});
    if (j.contains("records")) {
      for (const auto& jr : j.at("records")) {
        msg.records.push_back(record_from_json(jr));
      }
    }
    if (j.contains("tag")) {
      const std::string tag = j.at("tag").get<std::string>();
      if (tag == "untagged") {
        msg.tag = MsgTag::kUntagged;
      } else if (tag == "benign") {
        msg.tag = MsgTag::kBenign;
      } else if (tag == "poisoned") {
        msg.tag = MsgTag::kPoisoned;
      } else {
        throw FormatError("unknown tag: " + tag);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid message JSON: ") + e.what());
  }
  if (msg.msg_type == MsgType::kOther && !msg.records.empty()) {
    throw FormatError("OTHER messages must not carry records");
  }
  for (const KpiRecord& r : msg.records) {
    if (r.timestamp != msg.period_start) {
      throw FormatError("record timestamp differs from period_start");
    }
  }
  return msg;
}

std::vector<KpiReportMessage> build_report_stream(
    const Dataset& dataset, const std::vector<Label>* labels,
    const Topology& topology) {
  if (!dataset_is_sorted(dataset)) {
    throw OrderingError("dataset must be sorted by (timestamp, ue_id)");
  }
  if (labels != nullptr && labels->size() != dataset.size()) {
    throw ShapeError("label count does not match record count");
  }
  // du index -> position in the global O-DU order
  std::vector<std::string> du_order;
  for (const GnbNode& g : topology.gnbs) {
    for (const std::string& du : g.o_du_ids) du_order.push_back(du);
  }

  std::vector<KpiReportMessage> out;
  std::size_t i = 0;
  while (i < dataset.size()) {
    const std::int64_t t = dataset[i].timestamp;
    // Collect this period's records per cell; the dataset is ue-sorted within
    // the period, so per-UE order inside each message is preserved. The map
    // key keeps the O-DU emission order stable (cell order == du order).
    std::map<std::uint32_t, KpiReportMessage> per_du;
    std::map<std::uint32_t, bool> has_poisoned;
    for (; i < dataset.size() && dataset[i].timestamp == t; ++i) {
      const KpiRecord& r = dataset[i];
      const std::uint32_t cell = topology.cell_of_ue(r.ue_id);
      auto [it, inserted] = per_du.try_emplace(cell);
      if (inserted) {
        it->second.msg_type = MsgType::kKpiReport;
        it->second.source_node = topology.o_du_of_cell(cell);
        it->second.period_start = t;
      }
      it->second.records.push_back(r);
      if (labels != nullptr && (*labels)[i] == Label::kPoisoned) {
        has_poisoned[cell] = true;
      }
    }
    for (auto& [cell, msg] : per_du) {
      if (labels != nullptr) {
        msg.tag = has_poisoned[cell] ? MsgTag::kPoisoned : MsgTag::kBenign;
      }
      out.push_back(std::move(msg));
    }
  }
  return out;
}

ReplayStream::ReplayStream(std::vector<KpiReportMessage> messages,
                           double speedup, std::int64_t report_period_s)
    : messages_(std::move(messages)),
      speedup_(speedup),
      report_period_s_(report_period_s) {
  if (!(speedup > 0.0)) throw ConfigError("speedup must be positive");
}

bool ReplayStream::next(KpiReportMessage& out) {
  if (pos_ >= messages_.size()) return false;
  const KpiReportMessage& msg = messages_[pos_];
  if (last_period_ >= 0 && msg.period_start != last_period_ &&
      std::isfinite(speedup_)) {
    const double delay_s =
        static_cast<double>(report_period_s_) / speedup_;
    std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
  }
  last_period_ = msg.period_start;
  out = msg;
  ++pos_;
  return true;
}

}  // namespace kpiguard
