#include "hoi/geom/procrustes.hpp"

#include <Eigen/SVD>

namespace hoi {

std::vector<Vec3> SimTransform::apply(const std::vector<Vec3>& pts) const {
  std::vector<Vec3> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = apply(pts[i]);
  return out;
}

SimTransform procrustes_align(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size()) throw LengthMismatch("procrustes: point counts differ");
  const auto n = static_cast<double>(src.size());
  if (src.size() < 3) throw DegenerateInput("procrustes: need at least 3 points");

  Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    mu_x += src[i];
    mu_y += dst[i];
  }
  mu_x /= n;
  mu_y /= n;

  Mat3 cov = Mat3::Zero();
  double var_x = 0;
  for (size_t i = 0; i < src.size(); ++i) {
    const Vec3 x = src[i] - mu_x;
    cov += (dst[i] - mu_y) * x.transpose();
    var_x += x.squaredNorm();
  }
  cov /= n;
  var_x /= n;
  if (var_x < 1e-18) throw DegenerateInput("procrustes: source points coincide");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  // Rank < 2 leaves the rotation unconstrained (collinear input).
  if (d[1] < 1e-12 * std::max(1.0, d[0])) {
    throw DegenerateInput("procrustes: degenerate (collinear) point configuration");
  }
  Mat3 s = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) s(2, 2) = -1;

  SimTransform out;
  out.rot = Rotation::from_matrix_trusted(svd.matrixU() * s * svd.matrixV().transpose());
  out.scale = (d.asDiagonal().toDenseMatrix() * s).trace() / var_x;
  out.trans = mu_y - out.scale * (out.rot * mu_x);
  return out;
}

double alignment_residual(const SimTransform& t, const std::vector<Vec3>& src,
                          const std::vector<Vec3>& dst) {
  if (src.size() != dst.size()) throw LengthMismatch("alignment_residual: point counts differ");
  double r = 0;
  for (size_t i = 0; i < src.size(); ++i) r += (t.apply(src[i]) - dst[i]).squaredNorm();
  return r;
}

}  // namespace hoi
