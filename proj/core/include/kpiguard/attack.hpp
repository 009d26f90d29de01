#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kpiguard/emulator.hpp"
#include "kpiguard/kpi.hpp"

namespace kpiguard {

// Where the falsified reports enter the system. Metadata only; both points
// produce the same record-level effect.
enum class InjectionPoint : std::uint8_t {
  kE2InterfaceMitm = 0,
  kCompromisedE2Node = 1,
};

constexpr const char* to_string(InjectionPoint p) noexcept {
  return p == InjectionPoint::kE2InterfaceMitm ? "E2_INTERFACE_MITM"
                                               : "COMPROMISED_E2_NODE";
}

struct PoisonInterval {
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // exclusive

  bool contains(std::int64_t t) const { return t >= start && t < end; }
  bool operator==(const PoisonInterval&) const = default;
};

struct VictimSchedule {
  std::uint32_t ue_id = 0;
  std::vector<PoisonInterval> intervals;  // disjoint, sorted by start

  bool operator==(const VictimSchedule&) const = default;
};

struct AttackPlan {
  std::vector<VictimSchedule> victims;  // sorted by ue_id
  double amplification_factor = 1.5;
  InjectionPoint injection_point = InjectionPoint::kCompromisedE2Node;
  std::uint64_t seed = 0;

  bool is_poisoned(std::int64_t t, std::uint32_t ue_id) const;
  std::int64_t poisoned_seconds() const;
  bool operator==(const AttackPlan&) const = default;
};

struct PlanParams {
  std::uint32_t victims_per_slice = 5;
  double amplification_factor = 1.5;
  std::uint32_t n_intervals = 6;
  std::int64_t min_interval_s = 60;
  std::int64_t max_interval_s = 300;
  InjectionPoint injection_point = InjectionPoint::kCompromisedE2Node;
};

// Selects victims uniformly without replacement per slice and draws disjoint
// poisoning intervals inside [0, duration_s). Deterministic for a given seed.
// Throws PlanError when the interval spec cannot fit or a slice has fewer UEs
// than requested.
AttackPlan make_plan(const std::vector<UeProfile>& population,
                     std::int64_t duration_s, const PlanParams& params,
                     std::uint64_t seed);

// For every victim: fits the multivariate normal on that UE's records outside
// the poisoned intervals, amplifies it, and overwrites the six KPI fields of
// every in-interval record with a fresh sample. Timestamps, UE ids, ordering
// and all non-victim records are untouched. Returns the poisoned dataset plus
// one label per record.
std::pair<Dataset, std::vector<Label>> poison(const Dataset& dataset,
                                              const AttackPlan& plan);

// Plan (de)serialization for reproducibility.
std::string plan_to_json(const AttackPlan& plan);
AttackPlan plan_from_json(const std::string& text);
void save_plan(const std::filesystem::path& path, const AttackPlan& plan);
AttackPlan load_plan(const std::filesystem::path& path);

}  // namespace kpiguard
