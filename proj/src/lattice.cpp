#include "wormsim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace wormsim {

void LatticeSpec::validate() const {
  if (!(height > 0.0)) throw LatticeError("lattice height must be > 0");
  if (!(diameter > 0.0)) throw LatticeError("lattice diameter must be > 0");
  if (!(structural_radius > 0.0) || !(muscle_radius > 0.0))
    throw LatticeError("rod radii must be > 0");
  if (n_columns < 1 || n_levels < 1) throw LatticeError("need at least one column and one level");
  if (structural_elements < 1 || muscle_elements < 1)
    throw LatticeError("element counts must be >= 1");
  if (!(connection_stiffness > 0.0)) throw LatticeError("connection stiffness must be > 0");
  if (connection_damping < 0.0) throw LatticeError("connection damping must be >= 0");
  try {
    structural_material.validate();
    muscle_material.validate();
  } catch (const std::invalid_argument& e) {
    throw LatticeError(e.what());
  }
}

std::size_t level_node(const LatticeSpec& spec, int level) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(level) *
                                              spec.structural_elements / spec.n_levels));
}

namespace {

Eigen::Vector2d unwrapped_point(int column, int level) {
  return {static_cast<double>(column), static_cast<double>(level)};
}

}  // namespace

LatticeSystem build_lattice(const LatticeSpec& spec) {
  spec.validate();
  LatticeSystem lattice;
  lattice.spec = spec;
  auto& sys = lattice.system;

  const double ring_radius = 0.5 * spec.diameter;
  const auto n_struct = static_cast<std::size_t>(spec.structural_elements);
  for (int c = 0; c < spec.n_columns; ++c) {
    const double phi = 2.0 * std::numbers::pi * c / spec.n_columns;
    const Eigen::Vector3d radial(std::cos(phi), std::sin(phi), 0.0);
    const Eigen::Vector3d base = ring_radius * radial;
    const Eigen::Vector3d top = base + Eigen::Vector3d(0.0, 0.0, spec.height);
    auto rod = make_straight_rod<double>(base, top, n_struct, spec.structural_radius,
                                         spec.structural_material, radial);
    rod.fixed_nodes[0] = 1;
    rod.fixed_elements[0] = 1;
    lattice.structural_rods.push_back(sys.rods.size());
    lattice.terminus_nodes.push_back({sys.rods.size(), n_struct});
    sys.rods.push_back(std::move(rod));
  }

  const auto n_muscle = static_cast<std::size_t>(spec.muscle_elements);
  for (int level = 0; level < spec.n_levels; ++level) {
    for (int c = 0; c < spec.n_columns; ++c) {
      const int id = level * spec.n_columns + c;
      const int next = (c + 1) % spec.n_columns;
      if (next == c)
        throw LatticeError("muscle " + std::to_string(id) +
                           " would span column " + std::to_string(c) + " to itself");
      const NodeRef a{lattice.structural_rods[c], level_node(spec, level)};
      const NodeRef b{lattice.structural_rods[next], level_node(spec, level + 1)};
      const Eigen::Vector3d pa = sys.rods[a.rod].positions.col(a.node);
      const Eigen::Vector3d pb = sys.rods[b.rod].positions.col(b.node);
      if ((pb - pa).norm() < 1e-12)
        throw LatticeError("muscle " + std::to_string(id) + " has coincident attachment nodes");

      Eigen::Vector3d outward = 0.5 * (pa + pb);
      outward.z() = 0.0;
      auto rod = make_straight_rod<double>(pa, pb, n_muscle, spec.muscle_radius,
                                           spec.muscle_material, outward);
      const std::size_t rod_index = sys.rods.size();
      sys.rods.push_back(std::move(rod));
      lattice.muscle_rods.push_back(rod_index);

      sys.connections.push_back({a.rod, a.node, rod_index, 0, spec.connection_stiffness,
                                 spec.connection_damping});
      sys.connections.push_back({b.rod, b.node, rod_index, n_muscle, spec.connection_stiffness,
                                 spec.connection_damping});

      MuscleLayout m;
      m.muscle_id = id;
      m.column = c;
      m.level = level;
      m.muscle_rod = rod_index;
      m.attach_a = a;
      m.attach_b = b;
      m.unwrapped_2d = {unwrapped_point(c, level), unwrapped_point(c + 1, level + 1)};
      lattice.muscles.push_back(m);
    }
  }
  sys.contraction.assign(sys.rods.size(), 0.0);
  validate_connections(sys);
  return lattice;
}

Eigen::Vector3d terminus_position(const LatticeSystem& lattice) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& ref : lattice.terminus_nodes)
    sum += lattice.system.rods[ref.rod].positions.col(ref.node);
  return sum / static_cast<double>(lattice.terminus_nodes.size());
}

Eigen::Vector3d terminus_velocity(const LatticeSystem& lattice) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& ref : lattice.terminus_nodes)
    sum += lattice.system.rods[ref.rod].velocities.col(ref.node);
  return sum / static_cast<double>(lattice.terminus_nodes.size());
}

void TargetPrism::validate() const {
  if (!(half_extents.array() > 0.0).all())
    throw std::invalid_argument("target prism half extents must be > 0");
}

void TargetSpec::validate() const {
  TargetPrism{center, half_extents}.validate();
  if (corner_index < 1 || corner_index > 8)
    throw std::invalid_argument("corner index must lie in 1..8");
}

std::array<Eigen::Vector3d, 8> target_positions(const TargetPrism& prism) {
  prism.validate();
  // (sx, sz) around a face: upper-left, upper-right, lower-right, lower-left
  constexpr std::array<std::array<int, 2>, 4> kFaceOrder{{{-1, 1}, {1, 1}, {1, -1}, {-1, -1}}};
  std::array<Eigen::Vector3d, 8> corners;
  for (int face = 0; face < 2; ++face) {
    const double sy = face == 0 ? 1.0 : -1.0;
    for (int k = 0; k < 4; ++k) {
      const Eigen::Vector3d sign(kFaceOrder[k][0], sy, kFaceOrder[k][1]);
      corners[face * 4 + k] = prism.center + sign.cwiseProduct(prism.half_extents);
    }
  }
  return corners;
}

Eigen::Vector3d target_position(const TargetSpec& target) {
  target.validate();
  return target_positions({target.center, target.half_extents})[target.corner_index - 1];
}

PlanarLattice unwrap_2d(const std::vector<MuscleLayout>& layout) {
  PlanarLattice planar;
  for (const auto& m : layout) {
    planar.n_columns = std::max(planar.n_columns, m.column + 1);
    planar.n_levels = std::max(planar.n_levels, m.level + 1);
  }
  for (int c = 0; c <= planar.n_columns; ++c)
    planar.structure.push_back({unwrapped_point(c, 0), unwrapped_point(c, planar.n_levels),
                                c % std::max(planar.n_columns, 1)});
  planar.muscles.reserve(layout.size());
  for (const auto& m : layout)
    planar.muscles.push_back({unwrapped_point(m.column, m.level),
                              unwrapped_point(m.column + 1, m.level + 1), m.muscle_id});
  std::sort(planar.muscles.begin(), planar.muscles.end(),
            [](const PlanarSegment& x, const PlanarSegment& y) { return x.id < y.id; });
  return planar;
}

}  // namespace wormsim
