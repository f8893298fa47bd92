#include "hoi/geom/rotation.hpp"

#include <cmath>
#include <vector>

#include <Eigen/SVD>

namespace hoi {

Rotation Rotation::from_matrix(const Mat3& m) {
  Rotation r(m);
  if (!r.is_valid()) {
    throw DegenerateInput("matrix is not a rotation within 1e-9");
  }
  return r;
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::exp(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-12) {
    return Rotation();
  }
  return Rotation(Eigen::AngleAxisd(angle, v / angle).toRotationMatrix());
}

Rotation Rotation::about_x(double rad) { return exp(Vec3(rad, 0, 0)); }
Rotation Rotation::about_y(double rad) { return exp(Vec3(0, rad, 0)); }
Rotation Rotation::about_z(double rad) { return exp(Vec3(0, 0, rad)); }

Vec6 Rotation::to_6d() const {
  Vec6 r;
  r.head<3>() = m_.col(0);
  r.tail<3>() = m_.col(1);
  return r;
}

Vec3 Rotation::log() const {
  Eigen::AngleAxisd aa(m_);
  return aa.angle() * aa.axis();
}

double Rotation::angle() const { return rotation_angle_rad(m_); }

bool Rotation::is_valid(double tol) const {
  if (!m_.allFinite()) return false;
  const double ortho = (m_.transpose() * m_ - Mat3::Identity()).norm();
  return ortho <= tol * 10 && std::abs(m_.determinant() - 1.0) <= tol * 10;
}

Rotation rot6d_to_matrix(const Vec6& r6) {
  const Vec3 a1 = r6.head<3>();
  const Vec3 a2 = r6.tail<3>();
  const double n1 = a1.norm();
  if (n1 < 1e-9) throw DegenerateInput("rot6d: first column near zero");
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double n2 = u.norm();
  if (n2 < 1e-9) throw DegenerateInput("rot6d: columns near parallel");
  const Vec3 b2 = u / n2;
  const Vec3 b3 = b1.cross(b2);
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b3;
  return Rotation::from_matrix_trusted(m);
}

void rot6d_backward(const Vec6& r6, const Mat3& grad_rot, Vec6& grad_r6) {
  const Vec3 a1 = r6.head<3>();
  const Vec3 a2 = r6.tail<3>();
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const double s = b1.dot(a2);
  const Vec3 u = a2 - s * b1;
  const double n2 = u.norm();
  const Vec3 b2 = u / n2;

  Vec3 gb1 = grad_rot.col(0);
  Vec3 gb2 = grad_rot.col(1);
  const Vec3 gb3 = grad_rot.col(2);

  // b3 = b1 x b2
  gb1 += b2.cross(gb3);
  gb2 += gb3.cross(b1);

  // b2 = u / n2
  const Vec3 gu = (gb2 - b2.dot(gb2) * b2) / n2;

  // u = a2 - (b1 . a2) b1
  Vec3 ga2 = gu - b1 * b1.dot(gu);
  gb1 += -a2 * b1.dot(gu) - s * gu;

  // b1 = a1 / n1
  const Vec3 ga1 = (gb1 - b1.dot(gb1) * b1) / n1;

  grad_r6.head<3>() += ga1;
  grad_r6.tail<3>() += ga2;
}

Rotation symmetric_orthogonalize(const Mat3& m) {
  if (!m.allFinite()) throw DegenerateInput("symmetric_orthogonalize: non-finite input");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv[1] < 1e-9) {
    throw DegenerateInput("symmetric_orthogonalize: rank-deficient input");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 s = Mat3::Identity();
  s(2, 2) = (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation::from_matrix_trusted(u * s * v.transpose());
}

Rotation slerp(const Rotation& a, const Rotation& b, double t) {
  Eigen::Quaterniond qa = a.quaternion();
  Eigen::Quaterniond qb = b.quaternion();
  double dot = qa.dot(qb);
  if (dot < 0) {
    qb.coeffs() = -qb.coeffs();
    dot = -dot;
  }
  dot = std::min(dot, 1.0);
  const double theta = std::acos(dot);
  Eigen::Quaterniond out;
  if (theta < 1e-10) {
    out.coeffs() = (1.0 - t) * qa.coeffs() + t * qb.coeffs();
  } else {
    const double inv_sin = 1.0 / std::sin(theta);
    const double wa = std::sin((1.0 - t) * theta) * inv_sin;
    const double wb = std::sin(t * theta) * inv_sin;
    out.coeffs() = wa * qa.coeffs() + wb * qb.coeffs();
  }
  out.normalize();
  return Rotation::from_quaternion(out);
}

double rotation_angle_rad(const Mat3& m) {
  const double c = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

double rotation_angle_error_deg(const Rotation& a, const Rotation& b) {
  return rad2deg(rotation_angle_rad(a.matrix().transpose() * b.matrix()));
}

Rotation rotation_mean(const std::vector<Rotation>& rs) {
  if (rs.empty()) throw EmptyInput("rotation_mean: empty input");
  Mat3 acc = Mat3::Zero();
  for (const auto& r : rs) acc += r.matrix();
  return symmetric_orthogonalize(acc / static_cast<double>(rs.size()));
}

Rotation random_rotation(Rng& rng) {
  return Rotation::exp(rng.unit_vector() * rng.uniform(0.0, kPi));
}

}  // namespace hoi
