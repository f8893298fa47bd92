#include "hoi/geom/camera.hpp"

namespace hoi {

void Camera::validate() const {
  if (fx <= 0 || fy <= 0) throw DegenerateInput("camera: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw DegenerateInput("camera: image size must be > 0");
}

Vec2 Camera::project(const Vec3& p) const {
  if (p.z() <= 1e-9) throw BehindCamera("project: point at or behind the camera plane");
  return Vec2(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
}

Vec3 Camera::unproject(const Vec2& px, double depth) const {
  return Vec3((px.x() - cx) / fx * depth, (px.y() - cy) / fy * depth, depth);
}

Eigen::Matrix<double, 2, 3> Camera::project_jacobian(const Vec3& p) const {
  Eigen::Matrix<double, 2, 3> j;
  const double iz = 1.0 / p.z();
  j << fx * iz, 0, -fx * p.x() * iz * iz,
       0, fy * iz, -fy * p.y() * iz * iz;
  return j;
}

Vec2 OrthoCamera::plane_coords(const Vec3& p) const {
  const Vec3 d = p - origin;
  switch (axis) {
    case OrthoAxis::kRight: return Vec2(d.z(), d.y());
    case OrthoAxis::kBack: return Vec2(-d.x(), d.y());
    case OrthoAxis::kTop: return Vec2(d.x(), d.z());
  }
  return Vec2::Zero();
}

double OrthoCamera::depth(const Vec3& p) const {
  const Vec3 d = p - origin;
  switch (axis) {
    case OrthoAxis::kRight: return -d.x();
    case OrthoAxis::kBack: return -d.z();
    case OrthoAxis::kTop: return d.y();
  }
  return 0;
}

Vec2 OrthoCamera::project(const Vec3& p) const {
  const Vec2 ab = plane_coords(p);
  return Vec2(0.5 * (width - 1) + scale * ab.x(),
              0.5 * (height - 1) + scale * ab.y());
}

}  // namespace hoi
