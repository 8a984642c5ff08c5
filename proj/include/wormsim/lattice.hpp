#ifndef WORMSIM_LATTICE_HPP_
#define WORMSIM_LATTICE_HPP_

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wormsim/system.hpp"

namespace wormsim {

class LatticeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry and material of the lattice worm, in SI units.
struct LatticeSpec {
  double height = 0.100;
  double diameter = 0.075;
  int n_columns = 6;
  int n_levels = 7;
  int structural_elements = 40;
  int muscle_elements = 2;
  double structural_radius = 0.010;
  double muscle_radius = 0.005;
  MaterialParams<double> structural_material{70e3, 0.5, 1070.0};
  MaterialParams<double> muscle_material{25e3, 0.5, 1060.0};
  double connection_stiffness = 100.0;  // N/m
  double connection_damping = 0.0;      // N s/m

  int muscle_count() const { return n_columns * n_levels; }
  void validate() const;
};

struct NodeRef {
  std::size_t rod{};
  std::size_t node{};
  bool operator==(const NodeRef&) const = default;
};

/// One muscle of the lattice. `attach_a` sits on column `column` at level
/// `level`; `attach_b` on the next column (wrapping) one level up.
struct MuscleLayout {
  int muscle_id{};
  int column{};
  int level{};
  std::size_t muscle_rod{};
  NodeRef attach_a;
  NodeRef attach_b;
  // endpoints of the muscle's segment in the unwrapped lattice
  std::array<Eigen::Vector2d, 2> unwrapped_2d;
};

struct LatticeSystem {
  LatticeSpec spec;
  RodSystem<double> system;
  std::vector<std::size_t> structural_rods;  // one per column
  std::vector<std::size_t> muscle_rods;      // indexed by muscle id
  std::vector<MuscleLayout> muscles;
  std::vector<NodeRef> terminus_nodes;       // top node of every structural rod
};

/// Builds the worm in its rest configuration: clamped structural columns on a
/// circle, diagonal muscles between adjacent columns on consecutive levels,
/// each muscle end tied to its structural node by a spring.
LatticeSystem build_lattice(const LatticeSpec& spec);

/// Structural node index of a level boundary (0 .. n_levels).
std::size_t level_node(const LatticeSpec& spec, int level);

/// Centroid of the structural top nodes.
Eigen::Vector3d terminus_position(const LatticeSystem& lattice);
Eigen::Vector3d terminus_velocity(const LatticeSystem& lattice);

/// Axis-aligned box whose corners are the reaching targets.
struct TargetPrism {
  Eigen::Vector3d center{0.0, 0.0, 0.100};
  Eigen::Vector3d half_extents{0.030, 0.030, 0.020};
  void validate() const;
};

/// One corner of a prism.
struct TargetSpec {
  Eigen::Vector3d center;
  Eigen::Vector3d half_extents;
  int corner_index{};
  void validate() const;
};

/// Corners 1-4 lie on the far face (+y), 5-8 on the near face (-y). On each
/// face the order is upper-left, upper-right, lower-right, lower-left as seen
/// from the -y side looking along +y (x to the right, z up).
std::array<Eigen::Vector3d, 8> target_positions(const TargetPrism& prism);
Eigen::Vector3d target_position(const TargetSpec& target);

struct PlanarSegment {
  Eigen::Vector2d from;
  Eigen::Vector2d to;
  int id{};  // column for structure, muscle id for muscles
};

/// Flattened lattice for the activation heatmap. Columns map to x (column 0's
/// image repeats at x = n_columns to close the seam), levels to y.
struct PlanarLattice {
  int n_columns{};
  int n_levels{};
  std::vector<PlanarSegment> structure;
  std::vector<PlanarSegment> muscles;  // sorted by muscle id
};

PlanarLattice unwrap_2d(const std::vector<MuscleLayout>& layout);

}  // namespace wormsim

#endif  // WORMSIM_LATTICE_HPP_
