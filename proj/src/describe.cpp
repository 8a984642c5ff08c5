#include "wormsim/describe.hpp"

namespace wormsim {

using nlohmann::json;

namespace {

json point(const Eigen::Vector3d& p) { return {p.x(), p.y(), p.z()}; }

}  // namespace

json describe(const ExperimentConfig& config) {
  const LatticeEnv env(config.env);
  const LatticeSystem& lat = env.lattice();
  json j;
  j["config_hash"] = config_hash(config);
  j["config"] = config_to_json(config);

  json rods = json::array();
  for (std::size_t r = 0; r < lat.system.rods.size(); ++r) {
    const auto& rod = lat.system.rods[r];
    rods.push_back({{"index", r},
                    {"kind", r < lat.structural_rods.size() ? "structure" : "muscle"},
                    {"elements", rod.element_count()},
                    {"radius_m", rod.radius},
                    {"mass_kg", rod.total_mass},
                    {"start_m", point(rod.positions.col(0))},
                    {"end_m", point(rod.positions.col(rod.positions.cols() - 1))}});
  }
  j["rods"] = rods;

  json connections = json::array();
  for (const auto& c : lat.system.connections)
    connections.push_back({{"rod_a", c.rod_a}, {"node_a", c.node_a}, {"rod_b", c.rod_b},
                           {"node_b", c.node_b}, {"stiffness_n_per_m", c.stiffness},
                           {"damping_ns_per_m", c.damping}});
  j["connections"] = connections;

  json muscles = json::array();
  for (const auto& m : lat.muscles)
    muscles.push_back({{"muscle_id", m.muscle_id},
                       {"column", m.column},
                       {"level", m.level},
                       {"rod", m.muscle_rod},
                       {"attach_a", {m.attach_a.rod, m.attach_a.node}},
                       {"attach_b", {m.attach_b.rod, m.attach_b.node}},
                       {"unwrapped_2d", {{m.unwrapped_2d[0].x(), m.unwrapped_2d[0].y()},
                                         {m.unwrapped_2d[1].x(), m.unwrapped_2d[1].y()}}}});
  j["muscles"] = muscles;

  json targets = json::array();
  const auto corners = target_positions(config.env.prism);
  for (std::size_t k = 0; k < corners.size(); ++k)
    targets.push_back({{"index", k + 1}, {"position_m", point(corners[k])}});
  j["targets"] = targets;
  j["terminus_m"] = point(terminus_position(lat));

  const auto& layout = env.layout();
  j["observation"] = {{"size", layout.size()},
                      {"points", layout.points},
                      {"muscles", layout.muscles},
                      {"positions_offset", layout.positions_offset()},
                      {"velocities_offset", layout.velocities_offset()},
                      {"actions_offset", layout.actions_offset()},
                      {"ceilings_offset", layout.ceilings_offset()},
                      {"target_offset", layout.target_offset()}};
  j["simulation"] = {{"dt_s", config.env.sim.dt},
                     {"stable_dt_estimate_s", stable_dt_estimate(lat.system)},
                     {"substeps_per_control", env.substeps_per_control()}};
  return j;
}

}  // namespace wormsim
