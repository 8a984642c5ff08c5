#ifndef WORMSIM_ROTATION_HPP_
#define WORMSIM_ROTATION_HPP_

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wormsim {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

namespace detail {

// Rodrigues coefficients sin(t)/t and (1 - cos(t))/t^2 for t^2 = theta2.
template <typename Scalar>
void rodrigues_coefficients(Scalar theta2, Scalar& a, Scalar& b) {
  if (theta2 < Scalar(1e-4)) {
    a = Scalar(1) - theta2 / Scalar(6) * (Scalar(1) - theta2 / Scalar(20));
    b = Scalar(0.5) - theta2 / Scalar(24) * (Scalar(1) - theta2 / Scalar(30));
  } else {
    const Scalar theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (Scalar(1) - std::cos(theta)) / theta2;
  }
}

// Coefficient of [w]x^2 in the inverse left Jacobian.
template <typename Scalar>
Scalar jacobian_inverse_coefficient(Scalar theta2) {
  if (theta2 < Scalar(1e-4))
    return Scalar(1) / Scalar(12) + theta2 * (Scalar(1) / Scalar(720) + theta2 / Scalar(30240));
  const Scalar theta = std::sqrt(theta2);
  return Scalar(1) / theta2 -
         (Scalar(1) + std::cos(theta)) / (Scalar(2) * theta * std::sin(theta));
}

}  // namespace detail

/// exp([w]x) by Rodrigues' formula.
template <typename Scalar>
Matrix3<Scalar> rotation_exp(const Vector3<Scalar>& w) {
  Scalar a, b;
  detail::rodrigues_coefficients(w.squaredNorm(), a, b);
  const Matrix3<Scalar> k = skew(w);
  return Matrix3<Scalar>::Identity() + a * k + b * k * k;
}

/// exp([w]x) * q without forming the rotation matrix.
template <typename Scalar>
Matrix3<Scalar> rotate(const Vector3<Scalar>& w, const Matrix3<Scalar>& q) {
  Scalar a, b;
  detail::rodrigues_coefficients(w.squaredNorm(), a, b);
  Matrix3<Scalar> out;
  for (int c = 0; c < 3; ++c) {
    const Vector3<Scalar> col = q.col(c);
    const Vector3<Scalar> wc = w.cross(col);
    out.col(c) = col + a * wc + b * w.cross(wc);
  }
  return out;
}

/// Rotation vector w with exp([w]x) = r. Goes through the quaternion so the
/// angle stays accurate near 0 and near pi.
template <typename Scalar>
Vector3<Scalar> rotation_log(const Matrix3<Scalar>& r) {
  const Eigen::Quaternion<Scalar> q(r);
  const Vector3<Scalar> v = q.vec();
  const Scalar s = v.norm();
  Scalar w = q.w();
  if (s < Scalar(1e-300)) return Vector3<Scalar>::Zero();
  // keep the angle in [0, pi]
  const Scalar sign = w < Scalar(0) ? Scalar(-1) : Scalar(1);
  w *= sign;
  const Scalar angle = Scalar(2) * std::atan2(s, w);
  return (sign * angle / s) * v;
}

/// Inverse of the left Jacobian of SO(3), J_l^{-1}(w).
template <typename Scalar>
Matrix3<Scalar> left_jacobian_inverse(const Vector3<Scalar>& w) {
  const Matrix3<Scalar> k = skew(w);
  return Matrix3<Scalar>::Identity() - Scalar(0.5) * k +
         detail::jacobian_inverse_coefficient(w.squaredNorm()) * k * k;
}

/// J_l^{-1}(w) v and J_l^{-1}(-w) v in one pass.
template <typename Scalar>
void left_jacobian_inverse_pair(const Vector3<Scalar>& w, const Vector3<Scalar>& v,
                                Vector3<Scalar>& plus, Vector3<Scalar>& minus) {
  const Scalar c = detail::jacobian_inverse_coefficient(w.squaredNorm());
  const Vector3<Scalar> wv = w.cross(v);
  const Vector3<Scalar> even = v + c * w.cross(wv);
  plus = even - Scalar(0.5) * wv;
  minus = even + Scalar(0.5) * wv;
}

/// Gram-Schmidt on the rows (d1, d2, d3), keeping d3 as the anchor.
template <typename Scalar>
void orthonormalize_rows(Matrix3<Scalar>& q) {
  Vector3<Scalar> d3 = q.row(2).transpose().normalized();
  Vector3<Scalar> d1 = q.row(0).transpose();
  d1 -= d1.dot(d3) * d3;
  d1.normalize();
  q.row(0) = d1.transpose();
  q.row(1) = d3.cross(d1).transpose();
  q.row(2) = d3.transpose();
}

template <typename Scalar>
Scalar orthonormality_error(const Matrix3<Scalar>& q) {
  return (q.transpose() * q - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff();
}

/// Director frame with d3 along `tangent` and d1 as close to `normal_hint` as
/// possible. Rows are (d1, d2, d3).
template <typename Scalar>
Matrix3<Scalar> frame_from_tangent(const Vector3<Scalar>& tangent,
                                   const Vector3<Scalar>& normal_hint) {
  const Vector3<Scalar> d3 = tangent.normalized();
  Vector3<Scalar> d1 = normal_hint - normal_hint.dot(d3) * d3;
  if (d1.norm() < Scalar(1e-8)) {
    // hint parallel to the tangent; pick any perpendicular
    Vector3<Scalar> alt = std::abs(d3.x()) < Scalar(0.9) ? Vector3<Scalar>::UnitX()
                                                         : Vector3<Scalar>::UnitY();
    d1 = alt - alt.dot(d3) * d3;
  }
  d1.normalize();
  Matrix3<Scalar> q;
  q.row(0) = d1.transpose();
  q.row(1) = d3.cross(d1).transpose();
  q.row(2) = d3.transpose();
  return q;
}

}  // namespace wormsim

#endif  // WORMSIM_ROTATION_HPP_
