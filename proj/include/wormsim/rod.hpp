#ifndef WORMSIM_ROD_HPP_
#define WORMSIM_ROD_HPP_

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "wormsim/rotation.hpp"

namespace wormsim {

/// Thrown when a rod state contains non-finite values.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct MaterialParams {
  Scalar youngs_modulus{};
  Scalar poisson_ratio{};
  Scalar density{};

  Scalar shear_modulus() const {
    return youngs_modulus / (Scalar(2) * (Scalar(1) + poisson_ratio));
  }

  void validate() const {
    if (!(youngs_modulus > Scalar(0)))
      throw std::invalid_argument("youngs_modulus must be > 0");
    if (!(density > Scalar(0))) throw std::invalid_argument("density must be > 0");
    if (!(poisson_ratio >= Scalar(0) && poisson_ratio <= Scalar(0.5)))
      throw std::invalid_argument("poisson_ratio must lie in [0, 0.5]");
  }
};

/// Circular cross-section properties.
template <typename Scalar>
struct CrossSection {
  Scalar area;
  Scalar second_moment;  // I1 = I2
  Scalar polar_moment;   // I3

  static CrossSection circular(Scalar radius) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar r2 = radius * radius;
    return {pi * r2, pi * r2 * r2 / Scalar(4), pi * r2 * r2 / Scalar(2)};
  }
};

/// Discretized Cosserat rod. n elements, n + 1 nodes. Directors store the
/// material frame as rows (d1, d2, d3) and map lab vectors to the material
/// frame; angular velocities live in the material frame.
template <typename Scalar>
struct Rod {
  Matrix3X<Scalar> positions;
  Matrix3X<Scalar> velocities;
  std::vector<Matrix3<Scalar>> directors;
  Matrix3X<Scalar> angular_velocities;

  VectorX<Scalar> rest_lengths;
  std::vector<Matrix3<Scalar>> rest_directors;
  Matrix3X<Scalar> rest_strains;     // per element, material frame
  Matrix3X<Scalar> rest_bend_angles;  // per interior joint, rotation vector

  Scalar radius{};
  MaterialParams<Scalar> material{};

  // Boundary conditions. A fixed node never moves; a fixed element never rotates.
  std::vector<char> fixed_nodes;
  std::vector<char> fixed_elements;

  // Derived from rest geometry by finalize_rest_state().
  VectorX<Scalar> node_masses;
  Matrix3X<Scalar> element_inertia;  // diagonal of the material-frame inertia
  Scalar total_mass{};

  std::size_t element_count() const { return directors.size(); }
  std::size_t node_count() const { return static_cast<std::size_t>(positions.cols()); }

  Vector3<Scalar> shear_stretch_rigidity() const {
    const auto cs = CrossSection<Scalar>::circular(radius);
    const Scalar g = material.shear_modulus();
    const Scalar alpha = Scalar(4) / Scalar(3);
    return {alpha * g * cs.area, alpha * g * cs.area, material.youngs_modulus * cs.area};
  }

  Vector3<Scalar> bend_twist_rigidity() const {
    const auto cs = CrossSection<Scalar>::circular(radius);
    return {material.youngs_modulus * cs.second_moment,
            material.youngs_modulus * cs.second_moment,
            material.shear_modulus() * cs.polar_moment};
  }
};

/// Voronoi length around interior node j + 1 (between elements j and j + 1).
template <typename Scalar>
Scalar rest_voronoi_length(const Rod<Scalar>& rod, std::size_t joint) {
  return Scalar(0.5) * (rod.rest_lengths[joint] + rod.rest_lengths[joint + 1]);
}

/// Relative rotation between adjacent frames: Q_{j+1} = exp(-[theta]x) Q_j.
template <typename Scalar>
Vector3<Scalar> bend_angle(const Matrix3<Scalar>& q_prev, const Matrix3<Scalar>& q_next) {
  return -rotation_log<Scalar>(q_next * q_prev.transpose());
}

template <typename Scalar>
Vector3<Scalar> shear_strain(const Rod<Scalar>& rod, std::size_t e) {
  const Vector3<Scalar> t = rod.positions.col(e + 1) - rod.positions.col(e);
  return rod.directors[e] * t / rod.rest_lengths[e] - Vector3<Scalar>::UnitZ();
}

/// Takes the current geometry as the stress-free reference and computes masses.
template <typename Scalar>
void finalize_rest_state(Rod<Scalar>& rod) {
  const std::size_t n = rod.element_count();
  if (n == 0) throw std::invalid_argument("rod needs at least one element");
  if (rod.node_count() != n + 1)
    throw std::invalid_argument("rod node count must equal element count + 1");
  rod.material.validate();
  if (!(rod.radius > Scalar(0))) throw std::invalid_argument("rod radius must be > 0");

  rod.rest_lengths.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    rod.rest_lengths[e] = (rod.positions.col(e + 1) - rod.positions.col(e)).norm();
    if (!(rod.rest_lengths[e] > Scalar(0)))
      throw std::invalid_argument("rod rest lengths must be > 0");
  }
  rod.rest_directors = rod.directors;
  rod.rest_strains.resize(3, n);
  for (std::size_t e = 0; e < n; ++e) {
    const Vector3<Scalar> t = rod.positions.col(e + 1) - rod.positions.col(e);
    rod.rest_strains.col(e) = rod.directors[e] * t / rod.rest_lengths[e] - Vector3<Scalar>::UnitZ();
  }
  rod.rest_bend_angles.resize(3, n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j)
    rod.rest_bend_angles.col(j) = bend_angle(rod.directors[j], rod.directors[j + 1]);

  const auto cs = CrossSection<Scalar>::circular(rod.radius);
  rod.node_masses = VectorX<Scalar>::Zero(n + 1);
  rod.element_inertia.resize(3, n);
  rod.total_mass = Scalar(0);
  for (std::size_t e = 0; e < n; ++e) {
    const Scalar m = rod.material.density * cs.area * rod.rest_lengths[e];
    rod.node_masses[e] += Scalar(0.5) * m;
    rod.node_masses[e + 1] += Scalar(0.5) * m;
    rod.total_mass += m;
    const Scalar rho_l = rod.material.density * rod.rest_lengths[e];
    rod.element_inertia.col(e) = Vector3<Scalar>(rho_l * cs.second_moment,
                                                 rho_l * cs.second_moment,
                                                 rho_l * cs.polar_moment);
  }
  if (rod.fixed_nodes.size() != n + 1) rod.fixed_nodes.assign(n + 1, 0);
  if (rod.fixed_elements.size() != n) rod.fixed_elements.assign(n, 0);
}

/// Straight rod between two points at rest, with d1 aligned to `normal_hint`.
template <typename Scalar>
Rod<Scalar> make_straight_rod(const Vector3<Scalar>& start, const Vector3<Scalar>& end,
                              std::size_t n_elements, Scalar radius,
                              const MaterialParams<Scalar>& material,
                              const Vector3<Scalar>& normal_hint) {
  if (n_elements == 0) throw std::invalid_argument("rod needs at least one element");
  if ((end - start).norm() <= Scalar(0)) throw std::invalid_argument("rod has zero length");
  Rod<Scalar> rod;
  rod.positions.resize(3, n_elements + 1);
  for (std::size_t i = 0; i <= n_elements; ++i) {
    const Scalar s = Scalar(i) / Scalar(n_elements);
    rod.positions.col(i) = start + s * (end - start);
  }
  rod.velocities = Matrix3X<Scalar>::Zero(3, n_elements + 1);
  rod.directors.assign(n_elements, frame_from_tangent<Scalar>(end - start, normal_hint));
  rod.angular_velocities = Matrix3X<Scalar>::Zero(3, n_elements);
  rod.radius = radius;
  rod.material = material;
  finalize_rest_state(rod);
  return rod;
}

/// Accumulates the elastic restoring loads of the linear Cosserat model into
/// `forces` (lab frame, per node) and `torques` (material frame, per element).
/// Forces and torques are the exact negative gradient of elastic_energy().
template <typename Scalar>
void accumulate_internal_loads(const Rod<Scalar>& rod, Matrix3X<Scalar>& forces,
                               Matrix3X<Scalar>& torques) {
  const std::size_t n = rod.element_count();
  const Vector3<Scalar> shear = rod.shear_stretch_rigidity();
  const Vector3<Scalar> bend = rod.bend_twist_rigidity();

  for (std::size_t e = 0; e < n; ++e) {
    const Matrix3<Scalar>& q = rod.directors[e];
    const Vector3<Scalar> local_t = q * (rod.positions.col(e + 1) - rod.positions.col(e));
    const Vector3<Scalar> sigma =
        local_t / rod.rest_lengths[e] - Vector3<Scalar>::UnitZ() - rod.rest_strains.col(e);
    const Vector3<Scalar> stress = shear.cwiseProduct(sigma);
    const Vector3<Scalar> lab = q.transpose() * stress;
    forces.col(e) += lab;
    forces.col(e + 1) -= lab;
    torques.col(e) += local_t.cross(stress);
  }

  for (std::size_t j = 0; j + 1 < n; ++j) {
    const Vector3<Scalar> theta = bend_angle(rod.directors[j], rod.directors[j + 1]);
    const Vector3<Scalar> moment =
        bend.cwiseProduct(theta - rod.rest_bend_angles.col(j)) / rest_voronoi_length(rod, j);
    Vector3<Scalar> on_next, on_prev;
    left_jacobian_inverse_pair<Scalar>(theta, moment, on_next, on_prev);
    torques.col(j) += on_prev;
    torques.col(j + 1) -= on_next;
  }
}

template <typename Scalar>
bool rod_is_finite(const Rod<Scalar>& rod) {
  if (!rod.positions.allFinite() || !rod.velocities.allFinite() ||
      !rod.angular_velocities.allFinite())
    return false;
  for (const auto& q : rod.directors)
    if (!q.allFinite()) return false;
  return true;
}

template <typename Scalar>
struct RodLoads {
  Matrix3X<Scalar> forces;   // lab frame, per node
  Matrix3X<Scalar> torques;  // material frame, per element
};

/// Elastic restoring loads. Throws InstabilityError on a non-finite state.
template <typename Scalar>
RodLoads<Scalar> compute_internal_loads(const Rod<Scalar>& rod) {
  if (!rod_is_finite(rod)) throw InstabilityError("non-finite rod state");
  RodLoads<Scalar> loads{Matrix3X<Scalar>::Zero(3, rod.node_count()),
                         Matrix3X<Scalar>::Zero(3, rod.element_count())};
  accumulate_internal_loads(rod, loads.forces, loads.torques);
  if (!loads.forces.allFinite() || !loads.torques.allFinite())
    throw InstabilityError("non-finite internal loads");
  return loads;
}

template <typename Scalar>
Scalar elastic_energy(const Rod<Scalar>& rod) {
  const std::size_t n = rod.element_count();
  const Vector3<Scalar> shear = rod.shear_stretch_rigidity();
  const Vector3<Scalar> bend = rod.bend_twist_rigidity();
  Scalar energy(0);
  for (std::size_t e = 0; e < n; ++e) {
    const Vector3<Scalar> sigma = shear_strain(rod, e) - rod.rest_strains.col(e);
    energy += Scalar(0.5) * rod.rest_lengths[e] * sigma.dot(shear.cwiseProduct(sigma));
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const Vector3<Scalar> d =
        bend_angle(rod.directors[j], rod.directors[j + 1]) - rod.rest_bend_angles.col(j);
    energy += Scalar(0.5) * d.dot(bend.cwiseProduct(d)) / rest_voronoi_length(rod, j);
  }
  return energy;
}

template <typename Scalar>
Scalar kinetic_energy(const Rod<Scalar>& rod) {
  Scalar energy(0);
  for (std::size_t i = 0; i < rod.node_count(); ++i)
    energy += Scalar(0.5) * rod.node_masses[i] * rod.velocities.col(i).squaredNorm();
  for (std::size_t e = 0; e < rod.element_count(); ++e) {
    const auto w = rod.angular_velocities.col(e);
    energy += Scalar(0.5) * w.dot(rod.element_inertia.col(e).cwiseProduct(w));
  }
  return energy;
}

template <typename Scalar>
Vector3<Scalar> linear_momentum(const Rod<Scalar>& rod) {
  return rod.velocities * rod.node_masses;
}

/// Current length along the centerline.
template <typename Scalar>
Scalar centerline_length(const Rod<Scalar>& rod) {
  Scalar length(0);
  for (std::size_t e = 0; e < rod.element_count(); ++e)
    length += (rod.positions.col(e + 1) - rod.positions.col(e)).norm();
  return length;
}

/// (current length - rest length) / rest length
template <typename Scalar>
Scalar axial_strain(const Rod<Scalar>& rod) {
  const Scalar rest = rod.rest_lengths.sum();
  return (centerline_length(rod) - rest) / rest;
}

}  // namespace wormsim

#endif  // WORMSIM_ROD_HPP_
