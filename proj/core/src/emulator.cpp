#include "kpiguard/emulator.hpp"

#include <cmath>
#include <utility>

#include "kpiguard/error.hpp"

namespace kpiguard {

namespace {

// Stream salts keep the population draw and the per-UE traffic streams
// independent of each other for a given config seed.
constexpr std::uint64_t kPopulationStream = 0x01;
constexpr std::uint64_t kUeTrafficStream = 0x02;

constexpr double kPrbNoiseFraction = 0.3;  // of the derived PRB mean
constexpr double kPrbNoiseFloor = 0.3;
constexpr double kPktNoiseFraction = 0.005;

double derived_prb_mean(double thp_mean) {
  return std::ceil(thp_mean / kMbpsPerPrb);
}

double derived_pkt_mean(double thp_mean) {
  return std::round(packets_per_sec(thp_mean));
}

}  // namespace

std::vector<UeProfile> make_population(const EmulationConfig& config,
                                       const Topology& topology, Rng& rng) {
  config.validate();
  std::vector<UeProfile> population;
  population.reserve(config.n_ues);
  for (std::uint32_t ue = 0; ue < config.n_ues; ++ue) {
    UeProfile p;
    p.ue_id = ue;
    p.slice = ue < config.slice_split[0] ? Slice::kEmbb : Slice::kUrllc;
    p.home_cell = topology.cell_of_ue(ue);

    const bool embb = p.slice == Slice::kEmbb;
    const double thp_dl = embb ? rng.uniform(20.0, 80.0) : rng.uniform(1.0, 10.0);
    const double thp_ul = embb ? rng.uniform(5.0, 20.0) : rng.uniform(0.5, 5.0);
    const double rho = rng.uniform(0.6, 0.9);
    const double cv_ul = rng.uniform(0.05, 0.08);
    const double cv_dl = rng.uniform(0.05, 0.08);

    TrafficParams& t = p.traffic;
    t.ar_rho = rho;
    t.mean[kFeatThpUl] = thp_ul;
    t.mean[kFeatThpDl] = thp_dl;
    t.mean[kFeatPrbUl] = derived_prb_mean(thp_ul);
    t.mean[kFeatPrbDl] = derived_prb_mean(thp_dl);
    t.mean[kFeatPktUl] = derived_pkt_mean(thp_ul);
    t.mean[kFeatPktDl] = derived_pkt_mean(thp_dl);
    t.noise_std[kFeatThpUl] = cv_ul * thp_ul;
    t.noise_std[kFeatThpDl] = cv_dl * thp_dl;
    t.noise_std[kFeatPrbUl] =
        std::max(kPrbNoiseFloor, kPrbNoiseFraction * t.mean[kFeatPrbUl]);
    t.noise_std[kFeatPrbDl] =
        std::max(kPrbNoiseFloor, kPrbNoiseFraction * t.mean[kFeatPrbDl]);
    t.noise_std[kFeatPktUl] = kPktNoiseFraction * packets_per_sec(thp_ul);
    t.noise_std[kFeatPktDl] = kPktNoiseFraction * packets_per_sec(thp_dl);
    population.push_back(std::move(p));
  }
  return population;
}

TelemetryEmulator::TelemetryEmulator(EmulationConfig config)
    : config_(std::move(config)), topology_(build_topology(config_)) {
  Rng pop_rng(derive_seed(config_.seed, kPopulationStream));
  population_ = make_population(config_, topology_, pop_rng);
  reset();
}

TelemetryEmulator::TelemetryEmulator(EmulationConfig config,
                                     std::vector<UeProfile> population)
    : config_(std::move(config)),
      topology_(build_topology(config_)),
      population_(std::move(population)) {
  if (population_.size() != config_.n_ues) {
    throw ConfigError("population size does not match n_ues");
  }
  reset();
}

void TelemetryEmulator::reset() {
  states_.clear();
  states_.reserve(population_.size());
  for (const UeProfile& p : population_) {
    UeState s{0.0, 0.0,
              Rng(derive_seed(config_.seed, kUeTrafficStream, p.ue_id))};
    // Start each throughput process from a stationary draw so that the mean
    // over the run matches the stationary mean without a burn-in phase.
    const double rho = p.traffic.ar_rho;
    const double scale = 1.0 / std::sqrt(1.0 - rho * rho);
    s.thp_ul = s.rng.normal(p.traffic.mean[kFeatThpUl],
                            p.traffic.noise_std[kFeatThpUl] * scale);
    s.thp_dl = s.rng.normal(p.traffic.mean[kFeatThpDl],
                            p.traffic.noise_std[kFeatThpDl] * scale);
    states_.push_back(std::move(s));
  }
}

KpiRecord TelemetryEmulator::emit(const UeProfile& profile, UeState& state,
                                  std::int64_t t) {
  const TrafficParams& tp = profile.traffic;
  auto ar_step = [&](double prev, int feat) {
    const double mu = tp.mean[feat];
    return mu + tp.ar_rho * (prev - mu) +
           state.rng.normal(0.0, tp.noise_std[feat]);
  };
  state.thp_ul = ar_step(state.thp_ul, kFeatThpUl);
  state.thp_dl = ar_step(state.thp_dl, kFeatThpDl);

  const double thp_ul = std::max(0.0, state.thp_ul);
  const double thp_dl = std::max(0.0, state.thp_dl);

  auto int_noise = [&](int feat) {
    return std::llround(state.rng.normal(0.0, tp.noise_std[feat]));
  };
  auto prb_for = [&](double thp, int feat) {
    const auto base = static_cast<std::int64_t>(std::ceil(thp / kMbpsPerPrb));
    return std::max<std::int64_t>(0, base + int_noise(feat));
  };
  auto pkts_for = [&](double thp, int feat) {
    const auto base = std::llround(packets_per_sec(thp));
    return std::max<std::int64_t>(0, base + int_noise(feat));
  };

  KpiRecord rec;
  rec.timestamp = t;
  rec.ue_id = profile.ue_id;
  rec.ue_thp_ul = thp_ul;
  rec.prb_used_ul = prb_for(thp_ul, kFeatPrbUl);
  rec.ue_thp_dl = thp_dl;
  rec.prb_used_dl = prb_for(thp_dl, kFeatPrbDl);
  rec.tot_nbr_ul_per_sec = pkts_for(thp_ul, kFeatPktUl);
  rec.tot_nbr_dl_per_sec = pkts_for(thp_dl, kFeatPktDl);
  return rec;
}

std::vector<KpiRecord> TelemetryEmulator::step(std::int64_t t) {
  if (t < 0) throw DomainError("timestamp must be non-negative");
  std::vector<KpiRecord> out;
  out.reserve(population_.size());
  for (std::size_t i = 0; i < population_.size(); ++i) {
    out.push_back(emit(population_[i], states_[i], t));
  }
  return out;
}

Dataset TelemetryEmulator::run() {
  reset();
  Dataset dataset;
  dataset.reserve(static_cast<std::size_t>(config_.duration_s) *
                  population_.size());
  for (std::int64_t t = 0; t < config_.duration_s; ++t) {
    auto records = step(t);
    dataset.insert(dataset.end(), records.begin(), records.end());
  }
  return dataset;  // ue_id ascending within each t by construction
}

Dataset emulate(const EmulationConfig& config) {
  return TelemetryEmulator(config).run();
}

}  // namespace kpiguard
