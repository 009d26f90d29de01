#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <tuple>

#include "kpiguard/emulator.hpp"
#include "kpiguard/error.hpp"
#include "kpiguard/message.hpp"

using namespace kpiguard;

namespace {

KpiRecord record_for(std::int64_t t, std::uint32_t ue, Rng& rng) {
  KpiRecord r;
  r.timestamp = t;
  r.ue_id = ue;
  r.ue_thp_ul = rng.uniform(0.0, 20.0);
  r.prb_used_ul = static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{10}));
  r.ue_thp_dl = rng.uniform(0.0, 80.0);
  r.prb_used_dl = static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{10}));
  r.tot_nbr_ul_per_sec = static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{5000}));
  r.tot_nbr_dl_per_sec = static_cast<std::int64_t>(rng.uniform_int(std::uint64_t{5000}));
  return r;
}

}  // namespace

TEST_CASE("OTHER messages round-trip with no records") {
  KpiReportMessage msg;
  msg.msg_type = MsgType::kOther;
  msg.source_node = "gnb0-du1";
  msg.period_start = 12;
  const KpiReportMessage back = decode_message(encode_message(msg));
  CHECK(back == msg);
  CHECK(back.records.empty());
}

TEST_CASE("seeded messages round-trip losslessly") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    KpiReportMessage msg;
    msg.msg_type = MsgType::kKpiReport;
    msg.source_node = "gnb" + std::to_string(trial % 3) + "-du0";
    msg.period_start = trial;
    const int n = static_cast<int>(rng.uniform_int(std::uint64_t{50})) + 1;
    for (int i = 0; i < n; ++i) {
      msg.records.push_back(record_for(trial, static_cast<std::uint32_t>(i), rng));
    }
    msg.tag = static_cast<MsgTag>(trial % 3);
    CHECK(decode_message(encode_message(msg)) == msg);
  }
}

TEST_CASE("the poisoned tag survives a round trip") {
  KpiReportMessage msg;
  msg.msg_type = MsgType::kKpiReport;
  msg.source_node = "gnb0-du0";
  msg.tag = MsgTag::kPoisoned;
  CHECK(decode_message(encode_message(msg)).tag == MsgTag::kPoisoned);
}

TEST_CASE("missing msg_type is a format error") {
  CHECK_THROWS_AS(decode_message(R"({"source_node":"x"})"), FormatError);
}

TEST_CASE("unknown fields are rejected") {
  CHECK_THROWS_AS(decode_message(R"({"msg_type":"OTHER","extra":1})"),
                  FormatError);
  CHECK_THROWS_AS(
      decode_message(
          R"({"msg_type":"KPI_REPORT","period_start":0,"records":[{"Timestamp":0,"UEid":1,"UEThpUl":1.0,"PrbUsedUl":1,"UEThpDl":1.0,"PrbUsedDl":1,"TotNbrUl_per_sec":1,"TotNbrDl_per_sec":1,"Bogus":2}]})"),
      FormatError);
}

TEST_CASE("OTHER with records is rejected both ways") {
  KpiReportMessage msg;
  msg.msg_type = MsgType::kOther;
  Rng rng(1);
  msg.records.push_back(record_for(0, 0, rng));
  CHECK_THROWS_AS(encode_message(msg), FormatError);
  CHECK_THROWS_AS(
      decode_message(
          R"({"msg_type":"OTHER","period_start":0,"records":[{"Timestamp":0,"UEid":1,"UEThpUl":1.0,"PrbUsedUl":1,"UEThpDl":1.0,"PrbUsedDl":1,"TotNbrUl_per_sec":1,"TotNbrDl_per_sec":1}]})"),
      FormatError);
}

TEST_CASE("record timestamps must match period_start") {
  Rng rng(1);
  KpiReportMessage msg;
  msg.msg_type = MsgType::kKpiReport;
  msg.period_start = 5;
  msg.records.push_back(record_for(6, 0, rng));
  CHECK_THROWS_AS(encode_message(msg), FormatError);
}

TEST_CASE("stream grouping: 2 timestamps x 9 O-DUs gives 18 ordered messages") {
  EmulationConfig cfg;
  cfg.n_ues = 18;  // two UEs per cell
  cfg.duration_s = 2;
  cfg.slice_split = {9, 9};
  cfg.n_gnbs = 3;
  cfg.seed = 7;
  TelemetryEmulator emu(cfg);
  const Dataset data = emu.run();
  const auto stream = build_report_stream(data, nullptr, emu.topology());
  REQUIRE(stream.size() == 18);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    CHECK(stream[i].period_start == static_cast<std::int64_t>(i / 9));
    CHECK(stream[i].records.size() == 2);
    CHECK(stream[i].tag == MsgTag::kUntagged);
  }
  // messages of one period come in O-DU order
  CHECK(stream[0].source_node == "gnb0-du0");
  CHECK(stream[8].source_node == "gnb2-du2");
}

TEST_CASE("replayed records concatenate back to the dataset in order") {
  EmulationConfig cfg;
  cfg.n_ues = 10;
  cfg.duration_s = 20;
  cfg.slice_split = {5, 5};
  cfg.n_gnbs = 3;
  cfg.seed = 11;
  TelemetryEmulator emu(cfg);
  const Dataset data = emu.run();
  auto stream = build_report_stream(data, nullptr, emu.topology());

  Dataset replayed;
  ReplayStream replay(std::move(stream),
                      std::numeric_limits<double>::infinity());
  KpiReportMessage msg;
  while (replay.next(msg)) {
    replayed.insert(replayed.end(), msg.records.begin(), msg.records.end());
  }
  std::sort(replayed.begin(), replayed.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.ue_id) < std::tie(b.timestamp, b.ue_id);
  });
  CHECK(replayed == data);
}

TEST_CASE("replay preserves per-UE record order even before sorting") {
  EmulationConfig cfg;
  cfg.n_ues = 6;
  cfg.duration_s = 30;
  cfg.slice_split = {3, 3};
  cfg.n_gnbs = 1;
  cfg.seed = 3;
  TelemetryEmulator emu(cfg);
  const Dataset data = emu.run();
  auto stream = build_report_stream(data, nullptr, emu.topology());
  std::map<std::uint32_t, std::int64_t> last_t;
  for (const auto& msg : stream) {
    for (const auto& r : msg.records) {
      auto it = last_t.find(r.ue_id);
      if (it != last_t.end()) CHECK(r.timestamp > it->second);
      last_t[r.ue_id] = r.timestamp;
    }
  }
}

TEST_CASE("infinite speedup replays without sleeping") {
  EmulationConfig cfg;
  cfg.n_ues = 4;
  cfg.duration_s = 200;
  cfg.slice_split = {2, 2};
  cfg.n_gnbs = 1;
  cfg.seed = 13;
  TelemetryEmulator emu(cfg);
  auto stream = build_report_stream(emu.run(), nullptr, emu.topology());
  const auto t0 = std::chrono::steady_clock::now();
  ReplayStream replay(std::move(stream),
                      std::numeric_limits<double>::infinity());
  KpiReportMessage msg;
  std::size_t n = 0;
  while (replay.next(msg)) ++n;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(n > 0);
  CHECK(secs < 1.0);  // 200 periods would take 200s unpaced at speedup 1
}

TEST_CASE("labels tag messages poisoned when any record is poisoned") {
  EmulationConfig cfg;
  cfg.n_ues = 4;
  cfg.duration_s = 3;
  cfg.slice_split = {2, 2};
  cfg.n_gnbs = 1;
  cfg.seed = 19;
  TelemetryEmulator emu(cfg);
  const Dataset data = emu.run();
  std::vector<Label> labels(data.size(), Label::kBenign);
  labels[1] = Label::kPoisoned;  // t=0, ue=1 -> cell 1 message
  const auto stream = build_report_stream(data, &labels, emu.topology());
  bool saw_poisoned = false, saw_benign = false;
  for (const auto& msg : stream) {
    if (msg.tag == MsgTag::kPoisoned) saw_poisoned = true;
    if (msg.tag == MsgTag::kBenign) saw_benign = true;
    CHECK(msg.tag != MsgTag::kUntagged);
  }
  CHECK(saw_poisoned);
  CHECK(saw_benign);
}
