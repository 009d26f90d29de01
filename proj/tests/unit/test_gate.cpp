#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "kpiguard/emulator.hpp"
#include "kpiguard/error.hpp"
#include "kpiguard/gate.hpp"
#include "kpiguard/train.hpp"

using namespace kpiguard;

namespace {

// A model that never flags: all-zero weights with a strongly benign head bias.
RecurrentClassifier never_flag_model(int length) {
  ClassifierArch arch;
  arch.hidden_units = {4, 3};
  arch.dropout_rate = 0.0;
  RecurrentClassifier model(arch, length);
  model.params()[model.params().size() - 2] = 10.0;   // benign logit bias
  model.params()[model.params().size() - 1] = -10.0;  // poisoned logit bias
  return model;
}

KpiRecord toy_record(std::int64_t t, std::uint32_t ue, double level, Rng& rng) {
  KpiRecord r;
  r.timestamp = t;
  r.ue_id = ue;
  Vec6 f;
  for (int k = 0; k < 6; ++k) f[k] = level + rng.normal();
  r.set_features(f);
  return r;
}

struct ToyWorld {
  Dataset data;
  std::vector<Label> labels;
  Topology topology;
  NormalizationStats stats;
};

// Two UEs on the same O-DU; UE 3 is poisoned (feature level 60 instead of 20)
// during [30, 40).
ToyWorld make_toy_world() {
  ToyWorld world;
  EmulationConfig cfg;
  cfg.n_ues = 2;
  cfg.duration_s = 60;
  cfg.slice_split = {1, 1};
  cfg.n_gnbs = 1;
  world.topology = build_topology(cfg);

  Rng rng(404);
  for (std::int64_t t = 0; t < 60; ++t) {
    for (std::uint32_t ue : {0u, 3u}) {
      const bool poisoned = ue == 3 && t >= 30 && t < 40;
      world.data.push_back(toy_record(t, ue, poisoned ? 60.0 : 20.0, rng));
      world.labels.push_back(poisoned ? Label::kPoisoned : Label::kBenign);
    }
  }
  world.stats = fit_normalization(world.data, world.labels);
  return world;
}

RecurrentClassifier train_toy_model(const ToyWorld& world, int length) {
  auto windows = make_windows(world.data, world.labels, WindowSpec{length, 1});
  for (Window& w : windows) w.features = normalize(w.features, world.stats);
  ClassifierArch arch;
  arch.hidden_units = {8, 4};
  arch.dropout_rate = 0.2;
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 16;
  cfg.seed = 9;
  return train(windows, arch, cfg, nullptr);
}

}  // namespace

TEST_CASE("OTHER messages bypass detection and stay untagged") {
  const RecurrentClassifier model = never_flag_model(3);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kTagAndForward}, model, stats);

  std::vector<KpiReportMessage> seen;
  gate.subscribe([&](const KpiReportMessage& m) { seen.push_back(m); });

  KpiReportMessage other;
  other.msg_type = MsgType::kOther;
  other.source_node = "gnb0-du0";
  other.period_start = 4;
  const GateResult r = gate.process(other);
  CHECK(r.bypassed);
  REQUIRE(r.delivered.has_value());
  CHECK(*r.delivered == other);  // untouched, including the untagged tag
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == other);
  CHECK(r.latency_ms >= 0.0);
  CHECK(gate.latencies_ms().size() == 1);
}

TEST_CASE("an empty KPI report is tagged benign and forwarded") {
  const RecurrentClassifier model = never_flag_model(3);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kTagAndForward}, model, stats);
  KpiReportMessage msg;
  msg.msg_type = MsgType::kKpiReport;
  msg.source_node = "gnb0-du0";
  const GateResult r = gate.process(msg);
  CHECK_FALSE(r.bypassed);
  REQUIRE(r.delivered.has_value());
  CHECK(r.delivered->tag == MsgTag::kBenign);
  CHECK(r.verdicts.empty());
}

TEST_CASE("cold start verdicts are benign until the buffer holds L records") {
  const RecurrentClassifier model = never_flag_model(4);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kTagAndForward}, model, stats);
  Rng rng(1);
  for (std::int64_t t = 0; t < 6; ++t) {
    KpiReportMessage msg;
    msg.msg_type = MsgType::kKpiReport;
    msg.source_node = "gnb0-du0";
    msg.period_start = t;
    msg.records.push_back(toy_record(t, 0, 20.0, rng));
    const GateResult r = gate.process(msg);
    REQUIRE(r.verdicts.size() == 1);
    CHECK(r.verdicts[0].warm == (t >= 3));
    if (t < 3) {
      CHECK(r.verdicts[0].verdict == Label::kBenign);
      CHECK(r.verdicts[0].p_poisoned == 0.0);
    }
  }
}

TEST_CASE("L=1 classifies from the very first record") {
  const ToyWorld world = make_toy_world();
  const RecurrentClassifier model = train_toy_model(world, 1);
  DetectionGate gate({GatePolicy::kTagAndForward}, model, world.stats);
  Rng rng(2);
  KpiReportMessage msg;
  msg.msg_type = MsgType::kKpiReport;
  msg.source_node = "gnb0-du0";
  msg.period_start = 0;
  msg.records.push_back(toy_record(0, 7, 60.0, rng));  // poisoned level
  msg.records.push_back(toy_record(0, 8, 20.0, rng));  // benign level
  const GateResult r = gate.process(msg);
  REQUIRE(r.verdicts.size() == 2);
  CHECK(r.verdicts[0].warm);
  CHECK(r.verdicts[0].verdict == Label::kPoisoned);
  CHECK(r.verdicts[1].verdict == Label::kBenign);
  CHECK(r.delivered->tag == MsgTag::kPoisoned);
}

TEST_CASE("online verdicts equal offline inference once buffers are warm") {
  const ToyWorld world = make_toy_world();
  const int length = 3;
  const RecurrentClassifier model = train_toy_model(world, length);

  // Offline pass: classify every sliding window directly.
  std::map<std::pair<std::uint32_t, std::int64_t>, Label> offline;
  for (const Window& w :
       make_windows(world.data, world.labels, WindowSpec{length, 1})) {
    const auto [pb, pp] = infer(model, w, world.stats);
    offline[{w.ue_id, w.start_t + length - 1}] =
        pp >= 0.5 ? Label::kPoisoned : Label::kBenign;
  }

  // Online pass through the gate.
  DetectionGate gate({GatePolicy::kTagAndForward}, model, world.stats);
  const auto stream = build_report_stream(world.data, nullptr, world.topology);
  std::size_t warm = 0;
  for (const auto& msg : stream) {
    const GateResult r = gate.process(msg);
    for (const UeVerdict& v : r.verdicts) {
      if (!v.warm) continue;
      ++warm;
      REQUIRE(offline.count({v.ue_id, msg.period_start}) == 1);
      CHECK(offline[{v.ue_id, msg.period_start}] == v.verdict);
    }
  }
  CHECK(warm == offline.size());
}

TEST_CASE("discard mode drops flagged records and notifies once each") {
  const ToyWorld world = make_toy_world();
  const int length = 3;
  const RecurrentClassifier model = train_toy_model(world, length);
  DetectionGate gate(
      {GatePolicy::kDiscardPoisonedAndNotify, ColdStartPolicy::kBenignByDefault},
      model, world.stats);

  std::set<std::pair<std::uint32_t, std::int64_t>> dropped;
  std::size_t delivered_records = 0;
  const auto stream = build_report_stream(world.data, nullptr, world.topology);
  for (const auto& msg : stream) {
    const GateResult r = gate.process(msg);
    REQUIRE(r.delivered.has_value());
    delivered_records += r.delivered->records.size();
    std::set<std::uint32_t> delivered_ues;
    for (const auto& rec : r.delivered->records) delivered_ues.insert(rec.ue_id);
    for (const UeVerdict& v : r.verdicts) {
      if (v.verdict == Label::kPoisoned) {
        CHECK(delivered_ues.count(v.ue_id) == 0);
        dropped.insert({v.ue_id, msg.period_start});
      }
    }
    CHECK(r.delivered->tag == MsgTag::kBenign);
  }

  // every dropped record appears in exactly one notification
  std::set<std::pair<std::uint32_t, std::int64_t>> notified;
  for (const SmoNotification& n : gate.notifications()) {
    CHECK(notified.insert({n.ue_id, n.period_start}).second);
    CHECK(n.verdict_confidence >= 0.5);
  }
  CHECK(notified == dropped);
  CHECK(delivered_records + dropped.size() == world.data.size());
  CHECK_FALSE(dropped.empty());

  // the poisoned interval [30, 40) of UE 3 must be inside the dropped set
  for (std::int64_t t = 30; t < 40; ++t) {
    CHECK(dropped.count({3u, t}) == 1);
  }
}

TEST_CASE("a clean stream passes both policies byte-identically modulo tag") {
  const ToyWorld world = make_toy_world();
  Dataset benign;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < world.data.size(); ++i) {
    if (world.labels[i] == Label::kBenign && world.data[i].ue_id == 0) {
      benign.push_back(world.data[i]);
      labels.push_back(Label::kBenign);
    }
  }
  const RecurrentClassifier model = never_flag_model(3);
  for (GatePolicy policy : {GatePolicy::kTagAndForward,
                            GatePolicy::kDiscardPoisonedAndNotify}) {
    DetectionGate gate({policy}, model, world.stats);
    const auto stream = build_report_stream(benign, nullptr, world.topology);
    for (const auto& msg : stream) {
      const GateResult r = gate.process(msg);
      REQUIRE(r.delivered.has_value());
      KpiReportMessage expect = msg;
      expect.tag = MsgTag::kBenign;
      CHECK(*r.delivered == expect);
    }
    CHECK(gate.notifications().empty());
  }
}

TEST_CASE("per-UE record order is preserved through the gate") {
  const ToyWorld world = make_toy_world();
  const RecurrentClassifier model = train_toy_model(world, 3);
  DetectionGate gate(
      {GatePolicy::kDiscardPoisonedAndNotify, ColdStartPolicy::kBenignByDefault},
      model, world.stats);
  std::map<std::uint32_t, std::int64_t> last_seen;
  gate.subscribe([&](const KpiReportMessage& m) {
    for (const auto& rec : m.records) {
      auto it = last_seen.find(rec.ue_id);
      if (it != last_seen.end()) CHECK(rec.timestamp > it->second);
      last_seen[rec.ue_id] = rec.timestamp;
    }
  });
  for (const auto& msg :
       build_report_stream(world.data, nullptr, world.topology)) {
    gate.process(msg);
  }
  CHECK(last_seen.size() == 2);
}

TEST_CASE("suppress-until-warm withholds cold records without notifying") {
  const RecurrentClassifier model = never_flag_model(4);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kDiscardPoisonedAndNotify,
                      ColdStartPolicy::kSuppressUntilWarm},
                     model, stats);
  Rng rng(3);
  for (std::int64_t t = 0; t < 6; ++t) {
    KpiReportMessage msg;
    msg.msg_type = MsgType::kKpiReport;
    msg.source_node = "gnb0-du0";
    msg.period_start = t;
    msg.records.push_back(toy_record(t, 0, 20.0, rng));
    const GateResult r = gate.process(msg);
    CHECK(r.delivered->records.size() == (t >= 3 ? 1u : 0u));
  }
  CHECK(gate.notifications().empty());
}

TEST_CASE("undecodable lines are quarantined, not fatal") {
  const RecurrentClassifier model = never_flag_model(3);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kTagAndForward}, model, stats);
  CHECK_FALSE(gate.process_line("this is not json").has_value());
  CHECK_FALSE(gate.process_line(R"({"no_type":1})").has_value());
  CHECK(gate.quarantine_log().size() == 2);
  CHECK(gate.process_line(R"({"msg_type":"OTHER"})").has_value());
}

TEST_CASE("latency summary covers every processed message") {
  const RecurrentClassifier model = never_flag_model(2);
  const NormalizationStats stats;
  DetectionGate gate({GatePolicy::kTagAndForward}, model, stats);
  Rng rng(5);
  for (std::int64_t t = 0; t < 20; ++t) {
    KpiReportMessage msg;
    msg.msg_type = t % 5 == 0 ? MsgType::kOther : MsgType::kKpiReport;
    msg.source_node = "gnb0-du0";
    msg.period_start = t;
    if (msg.msg_type == MsgType::kKpiReport) {
      msg.records.push_back(toy_record(t, 0, 20.0, rng));
    }
    gate.process(msg);
  }
  const LatencySummary s = gate.latency_summary();
  CHECK(s.count == 20);
  CHECK(s.p50 >= 0.0);
  CHECK(s.p95 >= s.p50);
  CHECK(s.max >= s.p95);
}
