#include "kpiguard/attack.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "kpiguard/error.hpp"
#include "kpiguard/mvn.hpp"

namespace kpiguard {

namespace {

constexpr std::uint64_t kVictimSamplerStream = 0x11;
constexpr int kMaxIntervalDraws = 4096;

std::vector<PoisonInterval> draw_intervals(std::int64_t duration_s,
                                           const PlanParams& params, Rng& rng) {
  std::vector<PoisonInterval> intervals;
  for (std::uint32_t k = 0; k < params.n_intervals; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxIntervalDraws && !placed; ++attempt) {
      const std::int64_t len =
          rng.uniform_int(params.min_interval_s, params.max_interval_s);
      const std::int64_t start = rng.uniform_int(0, duration_s - len);
      PoisonInterval candidate{start, start + len};
      placed = std::none_of(
          intervals.begin(), intervals.end(), [&](const PoisonInterval& iv) {
            return candidate.start < iv.end && iv.start < candidate.end;
          });
      if (placed) intervals.push_back(candidate);
    }
    if (!placed) {
      throw PlanError("could not place " + std::to_string(params.n_intervals) +
                      " disjoint intervals of up to " +
                      std::to_string(params.max_interval_s) + "s in " +
                      std::to_string(duration_s) + "s");
    }
  }
  std::sort(intervals.begin(), intervals.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  return intervals;
}

}  // namespace

bool AttackPlan::is_poisoned(std::int64_t t, std::uint32_t ue_id) const {
  for (const VictimSchedule& v : victims) {
    if (v.ue_id != ue_id) continue;
    for (const PoisonInterval& iv : v.intervals) {
      if (iv.contains(t)) return true;
    }
    return false;
  }
  return false;
}

std::int64_t AttackPlan::poisoned_seconds() const {
  std::int64_t total = 0;
  for (const VictimSchedule& v : victims) {
    for (const PoisonInterval& iv : v.intervals) total += iv.end - iv.start;
  }
  return total;
}

AttackPlan make_plan(const std::vector<UeProfile>& population,
                     std::int64_t duration_s, const PlanParams& params,
                     std::uint64_t seed) {
  if (!(params.amplification_factor > 0.0)) {
    throw PlanError("amplification factor must be positive");
  }
  if (params.n_intervals > 0) {
    if (params.min_interval_s < 1 ||
        params.max_interval_s < params.min_interval_s) {
      throw PlanError("interval length bounds are invalid");
    }
    if (params.max_interval_s > duration_s) {
      throw PlanError("interval length exceeds the run duration");
    }
    if (static_cast<std::int64_t>(params.n_intervals) * params.min_interval_s >
        duration_s) {
      throw PlanError("requested intervals cannot fit in the run duration");
    }
  }

  std::vector<std::uint32_t> by_slice[2];
  for (const UeProfile& p : population) {
    by_slice[static_cast<int>(p.slice)].push_back(p.ue_id);
  }
  Rng rng(seed);
  std::vector<std::uint32_t> victims;
  for (auto& slice_ues : by_slice) {
    if (slice_ues.size() < params.victims_per_slice) {
      throw PlanError("slice has fewer UEs than requested victims");
    }
    std::sort(slice_ues.begin(), slice_ues.end());
    // Partial Fisher-Yates: the first victims_per_slice entries are a uniform
    // draw without replacement.
    for (std::uint32_t i = 0; i < params.victims_per_slice; ++i) {
      const auto j = i + static_cast<std::size_t>(
                             rng.uniform_int(slice_ues.size() - i));
      std::swap(slice_ues[i], slice_ues[j]);
      victims.push_back(slice_ues[i]);
    }
  }
  std::sort(victims.begin(), victims.end());

  AttackPlan plan;
  plan.amplification_factor = params.amplification_factor;
  plan.injection_point = params.injection_point;
  plan.seed = seed;
  for (std::uint32_t ue : victims) {
    VictimSchedule sched;
    sched.ue_id = ue;
    if (params.n_intervals > 0) {
      sched.intervals = draw_intervals(duration_s, params, rng);
    }
    plan.victims.push_back(std::move(sched));
  }
  return plan;
}

std::pair<Dataset, std::vector<Label>> poison(const Dataset& dataset,
                                              const AttackPlan& plan) {
  if (!dataset_is_sorted(dataset)) {
    throw OrderingError("dataset must be sorted by (timestamp, ue_id)");
  }
  Dataset out = dataset;
  std::vector<Label> labels(dataset.size(), Label::kBenign);

  std::unordered_map<std::uint32_t, std::vector<std::size_t>> by_ue;
  for (std::size_t i = 0; i < out.size(); ++i) {
    by_ue[out[i].ue_id].push_back(i);
  }

  for (const VictimSchedule& victim : plan.victims) {
    auto it = by_ue.find(victim.ue_id);
    if (it == by_ue.end()) {
      throw PlanError("plan references UE " + std::to_string(victim.ue_id) +
                      " which is not present in the dataset");
    }
    std::vector<std::size_t> in_interval;
    std::vector<KpiRecord> benign;
    for (std::size_t idx : it->second) {
      bool hit = false;
      for (const PoisonInterval& iv : victim.intervals) {
        if (iv.contains(out[idx].timestamp)) {
          hit = true;
          break;
        }
      }
      if (hit) {
        in_interval.push_back(idx);
      } else {
        benign.push_back(out[idx]);
      }
    }
    if (in_interval.empty()) continue;

    const MvnModel fitted = fit_mvn(benign);
    const MvnModel attack_model =
        amplify(fitted, plan.amplification_factor);
    Rng ue_rng(derive_seed(plan.seed, kVictimSamplerStream, victim.ue_id));
    for (std::size_t idx : in_interval) {
      out[idx].set_features(sample(attack_model, ue_rng));
      labels[idx] = Label::kPoisoned;
    }
  }
  return {std::move(out), std::move(labels)};
}

std::string plan_to_json(const AttackPlan& plan) {
  nlohmann::json j;
  j["amplification_factor"] = plan.amplification_factor;
  j["injection_point"] = to_string(plan.injection_point);
  j["seed"] = plan.seed;
  auto& victims = j["victims"] = nlohmann::json::array();
  for (const VictimSchedule& v : plan.victims) {
    nlohmann::json jv;
    jv["ue_id"] = v.ue_id;
    auto& ivs = jv["intervals"] = nlohmann::json::array();
    for (const PoisonInterval& iv : v.intervals) {
      ivs.push_back({{"start", iv.start}, {"end", iv.end}});
    }
    victims.push_back(std::move(jv));
  }
  return j.dump(2) + "\n";
}

AttackPlan plan_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid plan JSON: ") + e.what());
  }
  try {
    AttackPlan plan;
    plan.amplification_factor = j.at("amplification_factor").get<double>();
    const std::string point = j.at("injection_point").get<std::string>();
    if (point == "E2_INTERFACE_MITM") {
      plan.injection_point = InjectionPoint::kE2InterfaceMitm;
    } else if (point == "COMPROMISED_E2_NODE") {
      plan.injection_point = InjectionPoint::kCompromisedE2Node;
    } else {
      throw FormatError("unknown injection_point: " + point);
    }
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jv : j.at("victims")) {
      VictimSchedule v;
      v.ue_id = jv.at("ue_id").get<std::uint32_t>();
      for (const auto& ji : jv.at("intervals")) {
        v.intervals.push_back(
            {ji.at("start").get<std::int64_t>(), ji.at("end").get<std::int64_t>()});
      }
      plan.victims.push_back(std::move(v));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid plan JSON: ") + e.what());
  }
}

void save_plan(const std::filesystem::path& path, const AttackPlan& plan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << plan_to_json(plan);
}

AttackPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return plan_from_json(buf.str());
}

}  // namespace kpiguard
