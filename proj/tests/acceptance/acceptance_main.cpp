// Acceptance suite: runs the eight end-to-end checks on the desk-scale
// configuration and prints one pass/fail line per criterion. Exit code is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kpiguard/attack.hpp"
#include "kpiguard/baseline.hpp"
#include "kpiguard/checkpoint.hpp"
#include "kpiguard/config.hpp"
#include "kpiguard/dataset_io.hpp"
#include "kpiguard/experiment.hpp"
#include "kpiguard/gate.hpp"
#include "kpiguard/message.hpp"
#include "kpiguard/metrics.hpp"
#include "kpiguard/mvn.hpp"

using namespace kpiguard;
namespace fs = std::filesystem;

namespace {

// Desk-scale configuration: small enough for a laptop-class sweep, large
// enough to reproduce the detection-rate trends.
ExperimentConfig ci_config() {
  ExperimentConfig cfg;
  cfg.emulation.n_ues = 20;
  cfg.emulation.duration_s = 1200;
  cfg.emulation.slice_split = {10, 10};
  cfg.emulation.n_gnbs = 3;
  cfg.attack.victims_per_slice = 2;  // 4 victims total
  cfg.attack.n_intervals = 3;
  cfg.attack.min_interval_s = 120;
  cfg.attack.max_interval_s = 200;
  cfg.train.epochs = 5;
  cfg.train.batch_size = 32;
  cfg.sequence_lengths = {1, 5, 20};
  cfg.amplification_factors = {1.2, 1.5};
  cfg.max_train_windows = 20000;
  cfg.seed = 20250808;
  return cfg;
}

// Shared artifacts so criteria 3-8 do not retrain the same cells.
class ArtifactCache {
public:
  explicit ArtifactCache(ExperimentConfig config) : config_(std::move(config)) {}

  const ExperimentConfig& config() const { return config_; }

  const PreparedData& data(double factor) {
    auto it = data_.find(factor);
    if (it == data_.end()) {
      it = data_.emplace(factor, prepare_data(config_, factor)).first;
    }
    return it->second;
  }

  const CellResult& cell(int length, double factor) {
    const auto key = std::make_pair(length, factor);
    auto it = cells_.find(key);
    if (it == cells_.end()) {
      std::printf("         [building cell L=%d f=%s]\n", length,
                  format_factor(factor).c_str());
      std::fflush(stdout);
      it = cells_.emplace(key, run_cell(config_, data(factor), length)).first;
    }
    return it->second;
  }

private:
  ExperimentConfig config_;
  std::map<double, PreparedData> data_;
  std::map<std::pair<int, double>, CellResult> cells_;
};

struct CheckContext {
  std::string detail;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double require_rate(const std::optional<double>& rate) {
  return rate.has_value() ? *rate : -1.0;
}

// ---- criterion 1: MVN fitting, amplification, sampling ----

bool criterion_mvn(ArtifactCache&, CheckContext& ctx) {
  Mat6 factor = Mat6::Zero();
  const double diag[6] = {2.0, 1.0, 5.0, 1.5, 40.0, 90.0};
  for (int i = 0; i < 6; ++i) factor(i, i) = diag[i];
  factor(2, 0) = 1.0;
  factor(3, 2) = 0.5;
  factor(4, 0) = 10.0;
  factor(5, 2) = 20.0;
  Vec6 mu;
  mu << 10.0, 3.0, 50.0, 6.0, 1000.0, 5000.0;
  const Mat6 cov = factor * factor.transpose();

  const std::size_t n = 100000;
  Rng rng(424242);
  std::vector<Vec6> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec6 z;
    for (int k = 0; k < 6; ++k) z[k] = rng.normal();
    samples.push_back(mu + factor * z);
  }
  const MvnModel model = fit_mvn(samples);

  for (int i = 0; i < 6; ++i) {
    const double se = std::sqrt(cov(i, i) / static_cast<double>(n));
    ctx.expect(std::abs(model.mean[i] - mu[i]) <= 4.0 * se,
               "mean[" + std::to_string(i) + "] off by more than 4 SE");
  }
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double se =
          std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) /
                    static_cast<double>(n));
      ctx.expect(std::abs(model.cov(i, j) - cov(i, j)) <= 4.0 * se,
                 "cov(" + std::to_string(i) + "," + std::to_string(j) +
                     ") off by more than 4 SE");
    }
  }

  for (double f : {1.2, 1.5, 3.0}) {
    const MvnModel scaled = amplify(model, f);
    ctx.expect((scaled.mean.array() == (f * model.mean.array())).all(),
               "amplified mean is not exactly f*mean");
    ctx.expect((scaled.cov.array() == (f * model.cov.array())).all(),
               "amplified cov is not exactly f*cov");
  }
  ctx.detail = "fit within 4 SE on 100k samples; scaling exact";
  return ctx.ok;
}

// ---- criterion 2: BPTT gradients vs central finite differences ----

bool criterion_gradients(ArtifactCache&, CheckContext& ctx) {
  ClassifierArch arch;
  arch.hidden_units = {4, 3, 2};
  arch.dropout_rate = 0.0;
  RecurrentClassifier model(arch, 3);
  Rng rng(1337);
  model.init_params(rng);

  std::vector<Eigen::MatrixXd> xs(3, Eigen::MatrixXd(2, kNumKpiFeatures));
  for (auto& x : xs) {
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  }
  const std::vector<int> targets{0, 1};

  Eigen::VectorXd analytic;
  loss_and_gradients(model, xs, targets, {}, nullptr, analytic);

  const double h = 1e-4;
  Eigen::VectorXd unused;
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < model.params().size(); ++i) {
    const double saved = model.params()[i];
    model.params()[i] = saved + h;
    const double lp = loss_and_gradients(model, xs, targets, {}, nullptr, unused);
    model.params()[i] = saved - h;
    const double lm = loss_and_gradients(model, xs, targets, {}, nullptr, unused);
    model.params()[i] = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double rel =
        std::abs(analytic[i] - numeric) /
        std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3e over %lld parameters",
                max_rel, static_cast<long long>(model.params().size()));
  ctx.detail = buf;
  ctx.expect(max_rel < 1e-4, "gradient mismatch above 1e-4");
  return ctx.ok;
}

// ---- criterion 3: oracle equivalence at f = 3.0, L = 10 ----

bool criterion_oracle(ArtifactCache& cache, CheckContext& ctx) {
  const PreparedData& data = cache.data(3.0);
  const CellResult& cell = cache.cell(10, 3.0);

  const double lstm_dr = require_rate(cell.metrics.rates.detection_rate);
  const double lstm_fpr = require_rate(cell.metrics.rates.false_positive_rate);

  const SplitData split = split_by_time(data.poisoned, data.labels, data.split_t);
  const BaselineDetector baseline = fit_baseline(
      split.train_records, split.train_labels, 10, cache.config().baseline_quantile);
  ConfusionMatrix cm;
  for (const Window& w :
       make_windows(split.test_records, split.test_labels, WindowSpec{10, 1})) {
    cm.add(w.label, baseline_classify(baseline, w));
  }
  const Rates base_rates = compute_metrics(cm);
  const double base_dr = require_rate(base_rates.detection_rate);
  const double base_fpr = require_rate(base_rates.false_positive_rate);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "classifier DR=%.4f FPR=%.4f; Mahalanobis baseline DR=%.4f FPR=%.4f",
                lstm_dr, lstm_fpr, base_dr, base_fpr);
  ctx.detail = buf;
  ctx.expect(lstm_dr >= 0.95, "classifier DR below 0.95");
  ctx.expect(lstm_fpr <= 0.05 && lstm_fpr >= 0.0, "classifier FPR above 0.05");
  ctx.expect(base_dr >= 0.95, "baseline DR below 0.95");
  ctx.expect(base_fpr <= 0.05 && base_fpr >= 0.0, "baseline FPR above 0.05");
  return ctx.ok;
}

// ---- criterion 4: detection-rate trends across (L, f) ----

bool criterion_trends(ArtifactCache& cache, CheckContext& ctx) {
  const std::vector<int> lengths = cache.config().sequence_lengths;
  const std::vector<double> factors = cache.config().amplification_factors;
  constexpr double kTolerance = 0.03;

  std::map<std::pair<int, double>, double> dr;
  std::string report;
  for (double f : factors) {
    for (int length : lengths) {
      const CellResult& cell = cache.cell(length, f);
      dr[{length, f}] = require_rate(cell.metrics.rates.detection_rate);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "DR(L=%d,f=%s)=%.4f ", length,
                    format_factor(f).c_str(), dr[{length, f}]);
      report += buf;
    }
  }
  ctx.detail = report;

  for (double f : factors) {
    for (std::size_t i = 1; i < lengths.size(); ++i) {
      ctx.expect(dr[{lengths[i], f}] >= dr[{lengths[i - 1], f}] - kTolerance,
                 "DR not non-decreasing in L at f=" + format_factor(f));
    }
  }
  for (int length : lengths) {
    ctx.expect(dr[{length, 1.5}] >= dr[{length, 1.2}] - kTolerance,
               "DR(f=1.5) < DR(f=1.2) at L=" + std::to_string(length));
  }
  ctx.expect(dr[{20, 1.5}] - dr[{1, 1.2}] >= 0.15,
             "DR(f=1.5,L=20) - DR(f=1.2,L=1) below 15 percentage points");
  ctx.expect(dr[{20, 1.5}] >= 0.90, "DR(f=1.5,L=20) below 0.90");
  return ctx.ok;
}

// ---- criterion 5: gate latency budget ----

bool criterion_latency(ArtifactCache& cache, CheckContext& ctx) {
  const PreparedData& data = cache.data(3.0);
  const CellResult& cell = cache.cell(10, 3.0);

  DetectionGate gate({GatePolicy::kTagAndForward}, cell.model, cell.stats);
  auto messages = build_report_stream(data.poisoned, &data.labels, data.topology);
  ReplayStream replay(std::move(messages),
                      std::numeric_limits<double>::infinity());
  KpiReportMessage msg;
  while (replay.next(msg)) gate.process(msg);

  const LatencySummary lat = gate.latency_summary();
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "%zu messages, p50=%.3f ms, p95=%.3f ms, max=%.3f ms",
                lat.count, lat.p50, lat.p95, lat.max);
  ctx.detail = buf;
  ctx.expect(lat.count > 0, "no messages replayed");
  ctx.expect(lat.p95 <= 50.0, "p95 latency above 50 ms");
  ctx.expect(lat.max < 1000.0, "max latency at or above 1000 ms");
  return ctx.ok;
}

// ---- criterion 6: workflow soundness ----

bool criterion_workflow(ArtifactCache& cache, CheckContext& ctx) {
  const PreparedData& data = cache.data(3.0);
  const CellResult& cell = cache.cell(10, 3.0);
  const int length = 10;

  // Offline verdicts for every sliding window of the poisoned dataset.
  std::map<std::pair<std::uint32_t, std::int64_t>, Label> offline;
  {
    const auto windows =
        make_windows(data.poisoned, data.labels, WindowSpec{length, 1});
    std::vector<Window> batch;
    std::vector<std::pair<std::uint32_t, std::int64_t>> keys;
    auto flush = [&]() {
      if (batch.empty()) return;
      const Eigen::MatrixXd probs = infer_batch(cell.model, batch, cell.stats);
      for (Eigen::Index b = 0; b < probs.rows(); ++b) {
        offline[keys[static_cast<std::size_t>(b)]] =
            probs(b, 1) >= 0.5 ? Label::kPoisoned : Label::kBenign;
      }
      batch.clear();
      keys.clear();
    };
    for (const Window& w : windows) {
      batch.push_back(w);
      keys.emplace_back(w.ue_id, w.start_t + length - 1);
      if (batch.size() == 256) flush();
    }
    flush();
  }

  // Online pass with the discard policy; track equivalence and accounting.
  DetectionGate gate({GatePolicy::kDiscardPoisonedAndNotify,
                      ColdStartPolicy::kBenignByDefault},
                     cell.model, cell.stats);
  std::size_t warm = 0, mismatches = 0;
  std::set<std::pair<std::uint32_t, std::int64_t>> dropped;
  for (const auto& msg :
       build_report_stream(data.poisoned, &data.labels, data.topology)) {
    const GateResult r = gate.process(msg);
    std::set<std::uint32_t> delivered_ues;
    for (const auto& rec : r.delivered->records) delivered_ues.insert(rec.ue_id);
    for (const UeVerdict& v : r.verdicts) {
      if (v.warm) {
        ++warm;
        const auto it = offline.find({v.ue_id, msg.period_start});
        if (it == offline.end() || it->second != v.verdict) ++mismatches;
      }
      if (v.verdict == Label::kPoisoned) {
        dropped.insert({v.ue_id, msg.period_start});
        if (delivered_ues.count(v.ue_id) != 0) {
          ctx.expect(false, "a flagged record was delivered");
        }
      }
    }
  }
  ctx.expect(warm == offline.size(), "warm verdict count != offline window count");
  ctx.expect(mismatches == 0, std::to_string(mismatches) + " verdict mismatches");

  // Every dropped record appears in exactly one notification.
  std::set<std::pair<std::uint32_t, std::int64_t>> notified;
  bool duplicate = false;
  for (const SmoNotification& n : gate.notifications()) {
    duplicate = duplicate || !notified.insert({n.ue_id, n.period_start}).second;
  }
  ctx.expect(!duplicate, "duplicate SMO notification");
  ctx.expect(notified == dropped, "notifications do not match dropped records");

  // OTHER messages bypass detection untouched.
  KpiReportMessage other;
  other.msg_type = MsgType::kOther;
  other.source_node = "gnb0-du0";
  other.period_start = 99;
  const GateResult r = gate.process(other);
  ctx.expect(r.bypassed && r.delivered.has_value() && *r.delivered == other,
             "OTHER message was not forwarded untouched");

  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "%zu warm windows, 0 mismatches, %zu records dropped+notified",
                warm, dropped.size());
  if (ctx.ok) ctx.detail = buf;
  return ctx.ok;
}

// ---- criterion 7: xApp impact mitigation ----

bool criterion_impact(ArtifactCache& cache, CheckContext& ctx) {
  // A dedicated seeded f=1.5 run: same desk-scale data, trained to
  // convergence (the grid's five-epoch budget underfits the rare
  // interval-boundary windows whose leaks dominate the xApp impact).
  ExperimentConfig config = cache.config();
  config.train.epochs = 10;
  const PreparedData data = prepare_data(config, 1.5);
  const CellResult cell = run_cell(config, data, 10);

  const double dr = require_rate(cell.metrics.rates.detection_rate);
  ctx.expect(dr >= 0.90, "cell DR below the 0.90 precondition");

  const ImpactSummary impact = evaluate_impact(
      data, cell.model, cell.stats, cache.config().xapp_mbps_per_prb);
  char buf[160];
  std::snprintf(
      buf, sizeof(buf),
      "cell DR=%.4f; mean |dPRB| gated=%.4f ungated=%.4f (ratio %.3f)", dr,
      impact.mean_gated, impact.mean_ungated,
      impact.mean_ungated > 0 ? impact.mean_gated / impact.mean_ungated : 0.0);
  ctx.detail = buf;
  ctx.expect(impact.mean_ungated > 0.0, "attack had no ungated impact");
  ctx.expect(impact.mean_gated <= 0.5 * impact.mean_ungated,
             "gated deviation above 50% of ungated");
  return ctx.ok;
}

// ---- criterion 8: determinism and formats ----

bool criterion_determinism(ArtifactCache& cache, CheckContext& ctx) {
  const ExperimentConfig& config = cache.config();

  // Dataset files: byte-identical across runs, header matches the schema.
  EmulationConfig emu = config.emulation;
  emu.seed = derive_seed(config.seed, 0x77);
  const std::string an = encode_dataset(emulate(emu));
  const std::string bn = encode_dataset(emulate(emu));
  ctx.expect(an == bn, "emulated dataset files differ across runs");
  ctx.expect(an.rfind("Timestamp,UEid,UEThpUl,PrbUsedUl,UEThpDl,PrbUsedDl,"
                      "TotNbrUl_per_sec,TotNbrDl_per_sec\n",
                      0) == 0,
             "dataset header does not match the schema byte-for-byte");

  // Model checkpoints: retraining the same cell reproduces the bytes.
  const CellResult& cached = cache.cell(1, 1.5);
  const CellResult fresh = run_cell(config, cache.data(1.5), 1);
  const fs::path dir = fs::temp_directory_path() / "kpiguard_acceptance";
  fs::create_directories(dir);
  TrainConfig tconf = config.train;
  save_checkpoint(dir / "a.ckpt", cached.model, cached.stats, tconf);
  save_checkpoint(dir / "b.ckpt", fresh.model, fresh.stats, tconf);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  ctx.expect(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"),
             "model checkpoints differ across runs");

  // Checkpoint container round-trips and validates.
  const ModelCheckpoint loaded = load_checkpoint(dir / "a.ckpt");
  ctx.expect(loaded.model.params() == cached.model.params(),
             "checkpoint parameters changed through save/load");
  ctx.expect(loaded.model.window_length() == 1, "checkpoint lost its length");
  fs::remove_all(dir);

  // Metrics rows: byte-identical CSV for a repeated cell.
  ctx.expect(metrics_csv({cached.metrics}) == metrics_csv({fresh.metrics}),
             "metrics CSV differs across runs");

  // Codec round trips: dataset with labels, messages, plans.
  const auto [poisoned, labels] =
      poison(emulate(emu), cache.data(1.5).plan);
  const std::string encoded = encode_dataset(poisoned, &labels);
  const DecodedDataset decoded = decode_dataset(encoded);
  ctx.expect(decoded.labels.has_value() &&
                 encode_dataset(decoded.records, &*decoded.labels) == encoded,
             "labeled dataset round trip is lossy");

  const auto stream =
      build_report_stream(poisoned, &labels, cache.data(1.5).topology);
  bool msg_ok = true;
  for (std::size_t i = 0; i < stream.size(); i += 97) {
    msg_ok = msg_ok && decode_message(encode_message(stream[i])) == stream[i];
  }
  ctx.expect(msg_ok, "message round trip is lossy");
  ctx.expect(plan_from_json(plan_to_json(cache.data(1.5).plan)) ==
                 cache.data(1.5).plan,
             "plan round trip is lossy");

  if (ctx.ok) ctx.detail = "datasets, checkpoints, metrics and codecs stable";
  return ctx.ok;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // 0 = no stated budget
  std::function<bool(ArtifactCache&, CheckContext&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "MVN fit/amplify recovery", 10.0, criterion_mvn},
      {2, "BPTT gradients vs finite differences", 30.0, criterion_gradients},
      {3, "oracle equivalence at f=3.0, L=10", 600.0, criterion_oracle},
      {4, "detection-rate trends over (L, f)", 1200.0, criterion_trends},
      {5, "gate latency budget", 300.0, criterion_latency},
      {6, "workflow soundness", 0.0, criterion_workflow},
      {7, "xApp impact mitigation", 0.0, criterion_impact},
      {8, "determinism and formats", 0.0, criterion_determinism},
  };

  ArtifactCache cache(ci_config());
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    CheckContext ctx;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(cache, ctx);
    } catch (const std::exception& e) {
      ctx.detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      ok = false;
      ctx.detail += "; over the " + std::to_string(c.budget_s) + "s budget";
    }
    std::printf("criterion %d [%s] %s (%.1fs) %s\n", c.id,
                ok ? "PASS" : "FAIL", c.title, secs, ctx.detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures;
}
