#pragma once

#include <Eigen/Geometry>

#include "hoi/common.hpp"

namespace hoi {

// 3x3 orthonormal matrix with unit determinant. Construction through
// from_matrix verifies the invariants (1e-9); the trusted path is for
// internal kernels that produce rotations by construction.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  static Rotation from_matrix_trusted(const Mat3& m) { return Rotation(m); }
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  // exp map; v = axis * angle (radians)
  static Rotation exp(const Vec3& v);
  static Rotation about_x(double rad);
  static Rotation about_y(double rad);
  static Rotation about_z(double rad);

  const Mat3& matrix() const { return m_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_); }
  // First two columns, stacked; decodable by rot6d_to_matrix.
  Vec6 to_6d() const;
  Vec3 log() const;
  double angle() const;

  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool is_valid(double tol = 1e-9) const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

// Gram-Schmidt decode of the 6D rotation encoding: first embedded column
// normalized, second orthogonalized against it, third by cross product.
// Throws DegenerateInput when the columns are near-zero or parallel.
Rotation rot6d_to_matrix(const Vec6& r6);

// Adjoint of rot6d_to_matrix: accumulates d(loss)/d(r6) given d(loss)/d(R).
void rot6d_backward(const Vec6& r6, const Mat3& grad_rot, Vec6& grad_r6);

// Nearest rotation in Frobenius norm via SVD with determinant correction.
// Throws DegenerateInput when two singular values are below 1e-9.
Rotation symmetric_orthogonalize(const Mat3& m);

// Geodesic interpolation, t in [0, 1]. Antipodal quaternions are resolved by
// sign flip; the sign convention also fixes the exactly-180-degree case.
Rotation slerp(const Rotation& a, const Rotation& b, double t);

// arccos((trace(Ra^T Rb) - 1) / 2), clamped, in degrees.
double rotation_angle_error_deg(const Rotation& a, const Rotation& b);

// Rotation angle of a single rotation matrix, radians in [0, pi].
double rotation_angle_rad(const Mat3& m);

// Chordal mean re-projected to SO(3).
Rotation rotation_mean(const std::vector<Rotation>& rs);

Rotation random_rotation(Rng& rng);

}  // namespace hoi
