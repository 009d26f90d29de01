#pragma once

#include <cstdint>
#include <vector>

#include "kpiguard/kpi.hpp"
#include "kpiguard/rng.hpp"
#include "kpiguard/topology.hpp"

namespace kpiguard {

// Fixed derivation constants for the synthetic traffic model.
inline constexpr double kMbpsPerPrb = 10.0;
inline constexpr double kMeanPacketBytes = 1200.0;

// Packets per second implied by a throughput in Mbps.
constexpr double packets_per_sec(double thp_mbps) noexcept {
  return thp_mbps * 1e6 / (8.0 * kMeanPacketBytes);
}

struct TrafficParams {
  // Per-feature means. Throughput entries are the AR(1) process means; the
  // derived entries hold the derivation rule applied to the throughput mean
  // (useful as the noise-free fixed point).
  Vec6 mean = Vec6::Zero();
  double ar_rho = 0.0;  // shared AR(1) coefficient of both throughput processes
  // Per-feature noise std: innovation std for throughputs, integer-jitter std
  // for the derived PRB and packet counts.
  Vec6 noise_std = Vec6::Zero();
};

struct UeProfile {
  std::uint32_t ue_id = 0;
  Slice slice = Slice::kEmbb;
  std::uint32_t home_cell = 0;
  TrafficParams traffic;
};

// Draws one profile per UE. Slice archetypes: eMBB throughput means uniform in
// [20, 80] Mbps DL / [5, 20] UL, URLLC in [1, 10] DL / [0.5, 5] UL; AR(1)
// coefficient uniform in [0.6, 0.9]; innovation std uniform in [0.2, 0.3] of
// the mean. UEs are assigned round-robin to cells in ue_id order.
std::vector<UeProfile> make_population(const EmulationConfig& config,
                                       const Topology& topology, Rng& rng);

// Deterministic benign KPI source. Each UE owns an independent generator
// stream derived from (config.seed, ue_id), so the produced dataset depends
// only on the configuration.
class TelemetryEmulator {
public:
  explicit TelemetryEmulator(EmulationConfig config);

  // Custom population (sizes must agree with the config); same stepping rules.
  TelemetryEmulator(EmulationConfig config, std::vector<UeProfile> population);

  const EmulationConfig& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  const std::vector<UeProfile>& population() const { return population_; }

  // Produces one record per UE for timestamp t and advances the AR(1) states.
  // Callers must step timestamps in increasing order starting at 0.
  std::vector<KpiRecord> step(std::int64_t t);

  // Restarts the per-UE states and generates the full duration, sorted by
  // (timestamp, ue_id).
  Dataset run();

  void reset();

private:
  struct UeState {
    double thp_ul;  // unclamped AR(1) state
    double thp_dl;
    Rng rng;
  };

  KpiRecord emit(const UeProfile& profile, UeState& state, std::int64_t t);

  EmulationConfig config_;
  Topology topology_;
  std::vector<UeProfile> population_;
  std::vector<UeState> states_;
};

// Convenience wrapper: construct an emulator and run the full duration.
Dataset emulate(const EmulationConfig& config);

}  // namespace kpiguard
