#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kpiguard {

struct EmulationConfig {
  std::uint32_t n_ues = 50;
  std::int64_t duration_s = 10800;
  std::int64_t report_period_s = 1;  // the report schema is one row per second
  std::array<std::uint32_t, 2> slice_split = {25, 25};  // {eMBB, URLLC}
  std::uint32_t n_gnbs = 3;
  std::uint64_t seed = 0;

  // Throws ConfigError when any invariant is violated.
  void validate() const;
};

enum class Slice : std::uint8_t { kEmbb = 0, kUrllc = 1 };

constexpr const char* to_string(Slice s) noexcept {
  return s == Slice::kEmbb ? "eMBB" : "URLLC";
}

// One disaggregated base station: a central unit fronting three distributed
// units, each distributed unit serving one cell.
struct GnbNode {
  std::string o_cu_id;
  std::array<std::string, 3> o_du_ids;
  std::array<std::uint32_t, 3> cell_ids;
};

struct Topology {
  std::vector<GnbNode> gnbs;

  std::uint32_t n_cells() const {
    return static_cast<std::uint32_t>(gnbs.size()) * 3u;
  }

  // UEs attach round-robin over the cell list and stay attached.
  std::uint32_t cell_of_ue(std::uint32_t ue_id) const {
    return ue_id % n_cells();
  }

  const std::string& o_du_of_cell(std::uint32_t cell_id) const {
    return gnbs[cell_id / 3].o_du_ids[cell_id % 3];
  }

  const std::string& o_du_of_ue(std::uint32_t ue_id) const {
    return o_du_of_cell(cell_of_ue(ue_id));
  }
};

Topology build_topology(const EmulationConfig& config);

}  // namespace kpiguard
