#include "kpiguard/topology.hpp"

#include "kpiguard/error.hpp"

namespace kpiguard {

void EmulationConfig::validate() const {
  if (n_ues == 0) throw ConfigError("n_ues must be positive");
  if (duration_s < 1) throw ConfigError("duration_s must be at least 1");
  if (report_period_s != 1) {
    throw ConfigError("report_period_s is fixed at 1 second");
  }
  if (n_gnbs == 0) throw ConfigError("n_gnbs must be positive");
  if (slice_split[0] + slice_split[1] != n_ues) {
    throw ConfigError("slice_split counts must sum to n_ues");
  }
}

Topology build_topology(const EmulationConfig& config) {
  config.validate();
  Topology topo;
  topo.gnbs.reserve(config.n_gnbs);
  for (std::uint32_t g = 0; g < config.n_gnbs; ++g) {
    GnbNode node;
    const std::string prefix = "gnb" + std::to_string(g);
    node.o_cu_id = prefix + "-cu";
    for (int d = 0; d < 3; ++d) {
      node.o_du_ids[d] = prefix + "-du" + std::to_string(d);
      node.cell_ids[d] = g * 3 + static_cast<std::uint32_t>(d);
    }
    topo.gnbs.push_back(std::move(node));
  }
  return topo;
}

}  // namespace kpiguard
