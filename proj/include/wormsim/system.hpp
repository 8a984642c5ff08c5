#ifndef WORMSIM_SYSTEM_HPP_
#define WORMSIM_SYSTEM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <spdlog/spdlog.h>

#include "wormsim/rod.hpp"

namespace wormsim {

/// Zero-rest-length spring between two nodes of (possibly) different rods.
template <typename Scalar>
struct Connection {
  std::size_t rod_a{};
  std::size_t node_a{};
  std::size_t rod_b{};
  std::size_t node_b{};
  Scalar stiffness{};  // N/m
  Scalar damping{};    // N s/m, on the relative velocity
};

template <typename Scalar>
struct SimConfig {
  Scalar dt = Scalar(1e-5);
  Scalar damping_coefficient = Scalar(0.035);  // N s/m per rod
  int substeps_per_control = 1;
  bool gravity = false;
  Scalar gravity_acceleration = Scalar(9.81);

  void validate() const {
    if (!(dt > Scalar(0))) throw std::invalid_argument("dt must be > 0");
    if (!(damping_coefficient >= Scalar(0)))
      throw std::invalid_argument("damping_coefficient must be >= 0");
    if (substeps_per_control < 1) throw std::invalid_argument("substeps_per_control must be >= 1");
  }
};

/// An assembly of rods joined by springs. `contraction` holds the actuation
/// force magnitude per rod (zero for passive rods).
template <typename Scalar>
struct RodSystem {
  std::vector<Rod<Scalar>> rods;
  std::vector<Connection<Scalar>> connections;
  std::vector<Scalar> contraction;
  bool unstable = false;
  std::size_t skipped_contractions = 0;  // degenerate chords since last reset

  // scratch, sized lazily
  std::vector<Matrix3X<Scalar>> forces;
  std::vector<Matrix3X<Scalar>> torques;
};

template <typename Scalar>
void validate_connections(const RodSystem<Scalar>& system) {
  for (const auto& c : system.connections) {
    if (!(c.stiffness > Scalar(0))) throw std::invalid_argument("connection stiffness must be > 0");
    if (c.damping < Scalar(0)) throw std::invalid_argument("connection damping must be >= 0");
    if (c.rod_a >= system.rods.size() || c.rod_b >= system.rods.size())
      throw std::invalid_argument("connection references a missing rod");
    if (c.node_a >= system.rods[c.rod_a].node_count() ||
        c.node_b >= system.rods[c.rod_b].node_count())
      throw std::invalid_argument("connection references a missing node");
  }
}

template <typename Scalar>
void zero_loads(RodSystem<Scalar>& system) {
  system.forces.resize(system.rods.size());
  system.torques.resize(system.rods.size());
  for (std::size_t r = 0; r < system.rods.size(); ++r) {
    system.forces[r].setZero(3, system.rods[r].node_count());
    system.torques[r].setZero(3, system.rods[r].element_count());
  }
}

/// Spring force k (x_b - x_a) on node a and its negative on node b.
template <typename Scalar>
Vector3<Scalar> connection_spring_force(const RodSystem<Scalar>& system,
                                        const Connection<Scalar>& c) {
  return c.stiffness * (system.rods[c.rod_b].positions.col(c.node_b) -
                        system.rods[c.rod_a].positions.col(c.node_a));
}

/// Accumulates spring plus relative-velocity damping forces of every
/// connection into `forces` (one 3 x nodes block per rod).
template <typename Scalar>
void apply_connection_loads(const RodSystem<Scalar>& system,
                            std::vector<Matrix3X<Scalar>>& forces) {
  for (const auto& c : system.connections) {
    const Vector3<Scalar> relative_velocity = system.rods[c.rod_b].velocities.col(c.node_b) -
                                              system.rods[c.rod_a].velocities.col(c.node_a);
    const Vector3<Scalar> f = connection_spring_force(system, c) + c.damping * relative_velocity;
    forces[c.rod_a].col(c.node_a) += f;
    forces[c.rod_b].col(c.node_b) -= f;
  }
}

namespace detail {

template <typename Scalar>
bool contraction_pair(const Rod<Scalar>& muscle, Scalar force_magnitude,
                      Matrix3X<Scalar>& forces) {
  if (force_magnitude == Scalar(0)) return true;
  const std::size_t last = muscle.node_count() - 1;
  const Vector3<Scalar> chord = muscle.positions.col(last) - muscle.positions.col(0);
  const Scalar length = chord.norm();
  if (!(length >= Scalar(1e-9))) return false;
  const Vector3<Scalar> f = (force_magnitude / length) * chord;
  forces.col(0) += f;
  forces.col(last) -= f;
  return true;
}

}  // namespace detail

/// Contractile pair on the two end nodes of a muscle rod, pointing along the
/// end-to-end chord toward the rod centre. Returns false (and applies
/// nothing) for a degenerate chord.
template <typename Scalar>
bool apply_muscle_contraction(const Rod<Scalar>& muscle, Scalar force_magnitude,
                              Matrix3X<Scalar>& forces) {
  if (force_magnitude < Scalar(0))
    throw std::invalid_argument("contraction force must be >= 0");
  if (detail::contraction_pair(muscle, force_magnitude, forces)) return true;
  spdlog::warn("muscle chord degenerate; actuation skipped");
  return false;
}

template <typename Scalar>
bool detect_instability(const RodSystem<Scalar>& system) {
  for (const auto& rod : system.rods)
    if (!rod_is_finite(rod)) return true;
  return false;
}

template <typename Scalar>
Scalar stable_dt_estimate(const RodSystem<Scalar>& system) {
  constexpr Scalar kSafetyFactor = Scalar(0.1);
  Scalar bound = std::numeric_limits<Scalar>::infinity();
  for (const auto& rod : system.rods) {
    const Scalar wave_speed = std::sqrt(rod.material.youngs_modulus / rod.material.density);
    bound = std::min(bound, rod.rest_lengths.minCoeff() / wave_speed);
  }
  return bound * kSafetyFactor;
}

/// Elastic, actuation and (optionally) gravity loads at the current positions.
template <typename Scalar>
void compute_loads(RodSystem<Scalar>& system, const SimConfig<Scalar>& config) {
  zero_loads(system);
  for (std::size_t r = 0; r < system.rods.size(); ++r) {
    const auto& rod = system.rods[r];
    accumulate_internal_loads(rod, system.forces[r], system.torques[r]);
    if (config.gravity)
      system.forces[r].row(2) -= config.gravity_acceleration * rod.node_masses.transpose();
    if (r < system.contraction.size() && system.contraction[r] > Scalar(0) &&
        !detail::contraction_pair(rod, system.contraction[r], system.forces[r]))
      ++system.skipped_contractions;
  }
  for (const auto& c : system.connections) {
    const Vector3<Scalar> f = connection_spring_force(system, c);
    system.forces[c.rod_a].col(c.node_a) += f;
    system.forces[c.rod_b].col(c.node_b) -= f;
  }
}

namespace detail {

template <typename Scalar>
void half_drift(Rod<Scalar>& rod, Scalar h, bool renormalize) {
  for (std::size_t i = 0; i < rod.node_count(); ++i)
    if (!rod.fixed_nodes[i]) rod.positions.col(i) += h * rod.velocities.col(i);
  for (std::size_t e = 0; e < rod.element_count(); ++e) {
    if (rod.fixed_elements[e]) continue;
    const Vector3<Scalar> w = rod.angular_velocities.col(e);
    if (w.squaredNorm() == Scalar(0)) continue;
    rod.directors[e] = rotate<Scalar>(-h * w, rod.directors[e]);
    if (renormalize) orthonormalize_rows(rod.directors[e]);
  }
}

template <typename Scalar>
void kick(Rod<Scalar>& rod, const Matrix3X<Scalar>& forces, const Matrix3X<Scalar>& torques,
          Scalar h) {
  for (std::size_t i = 0; i < rod.node_count(); ++i)
    if (!rod.fixed_nodes[i]) rod.velocities.col(i) += (h / rod.node_masses[i]) * forces.col(i);
  for (std::size_t e = 0; e < rod.element_count(); ++e) {
    if (rod.fixed_elements[e]) continue;
    const Vector3<Scalar> inertia = rod.element_inertia.col(e);
    const Vector3<Scalar> w = rod.angular_velocities.col(e);
    const Vector3<Scalar> gyro = w.cross(inertia.cwiseProduct(w));
    rod.angular_velocities.col(e) += h * (torques.col(e) - gyro).cwiseQuotient(inertia);
  }
}

/// Exact solution of v' = -(c / m_rod) v over h for every node; angular
/// velocities decay at the same rate.
template <typename Scalar>
void damp(Rod<Scalar>& rod, Scalar damping_coefficient, Scalar h) {
  if (damping_coefficient == Scalar(0)) return;
  const Scalar rate = damping_coefficient / rod.total_mass;
  const Scalar decay = std::exp(-rate * h);
  rod.velocities *= decay;
  rod.angular_velocities *= decay;
}

/// Exact pairwise decay of each connection's relative velocity; conserves the
/// pair's momentum. Fixed nodes act as infinite masses.
template <typename Scalar>
void damp_connections(RodSystem<Scalar>& system, Scalar h) {
  for (const auto& c : system.connections) {
    if (c.damping == Scalar(0)) continue;
    auto& ra = system.rods[c.rod_a];
    auto& rb = system.rods[c.rod_b];
    const Scalar wa = ra.fixed_nodes[c.node_a] ? Scalar(0) : Scalar(1) / ra.node_masses[c.node_a];
    const Scalar wb = rb.fixed_nodes[c.node_b] ? Scalar(0) : Scalar(1) / rb.node_masses[c.node_b];
    const Scalar w = wa + wb;
    if (w == Scalar(0)) continue;
    const Vector3<Scalar> u = rb.velocities.col(c.node_b) - ra.velocities.col(c.node_a);
    const Vector3<Scalar> removed = u * (Scalar(1) - std::exp(-c.damping * w * h));
    ra.velocities.col(c.node_a) += (wa / w) * removed;
    rb.velocities.col(c.node_b) -= (wb / w) * removed;
  }
}

}  // namespace detail

/// One position-Verlet step: half drift, load evaluation, full kick, half
/// drift, then the exact dissipative update. Directors rotate through the
/// exponential map and are re-orthonormalized. Sets `system.unstable` when the
/// state goes non-finite.
template <typename Scalar>
void step(RodSystem<Scalar>& system, const SimConfig<Scalar>& config) {
  const Scalar h = config.dt;
  for (auto& rod : system.rods) detail::half_drift(rod, Scalar(0.5) * h, false);
  compute_loads(system, config);
  for (std::size_t r = 0; r < system.rods.size(); ++r)
    detail::kick(system.rods[r], system.forces[r], system.torques[r], h);
  for (auto& rod : system.rods) detail::half_drift(rod, Scalar(0.5) * h, true);
  for (auto& rod : system.rods) detail::damp(rod, config.damping_coefficient, h);
  detail::damp_connections(system, h);

  bool finite = true;
  for (const auto& rod : system.rods)
    finite = finite && rod.positions.allFinite() && rod.velocities.allFinite() &&
             rod.angular_velocities.allFinite();
  if (!finite) system.unstable = true;
}

template <typename Scalar>
Scalar connection_energy(const RodSystem<Scalar>& system) {
  Scalar energy(0);
  for (const auto& c : system.connections) {
    const Vector3<Scalar> d = system.rods[c.rod_b].positions.col(c.node_b) -
                              system.rods[c.rod_a].positions.col(c.node_a);
    energy += Scalar(0.5) * c.stiffness * d.squaredNorm();
  }
  return energy;
}

/// Kinetic plus elastic plus spring energy (plus gravity potential when on).
template <typename Scalar>
Scalar mechanical_energy(const RodSystem<Scalar>& system, const SimConfig<Scalar>& config) {
  Scalar energy = connection_energy(system);
  for (const auto& rod : system.rods) {
    energy += kinetic_energy(rod) + elastic_energy(rod);
    if (config.gravity)
      energy += config.gravity_acceleration * rod.positions.row(2).dot(rod.node_masses.transpose());
  }
  return energy;
}

template <typename Scalar>
Vector3<Scalar> linear_momentum(const RodSystem<Scalar>& system) {
  Vector3<Scalar> p = Vector3<Scalar>::Zero();
  for (const auto& rod : system.rods) p += linear_momentum(rod);
  return p;
}

}  // namespace wormsim

#endif  // WORMSIM_SYSTEM_HPP_
