#pragma once

#include "hoi/common.hpp"

namespace hoi {

// Pinhole camera; world frame equals camera frame (x right, y down,
// z forward, units meters).
struct Camera {
  double fx = 350.0, fy = 350.0;
  double cx = 128.0, cy = 128.0;
  int width = 256, height = 256;

  void validate() const;
  // Requires z > 0; callers wanting a soft error check z themselves.
  Vec2 project(const Vec3& p) const;
  Vec3 unproject(const Vec2& px, double depth) const;
  // d(pixel)/d(point), 2x3.
  Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& p) const;
};

enum class OrthoAxis { kRight, kBack, kTop };

// Orthographic camera used for triplane rendering. `origin` maps to the
// image center; scale is px per meter.
struct OrthoCamera {
  OrthoAxis axis = OrthoAxis::kRight;
  double scale = 256.0;
  int width = 512, height = 512;
  Vec3 origin = Vec3::Zero();

  // In-plane coordinates (meters, before pixel scaling) and view depth.
  Vec2 plane_coords(const Vec3& p) const;
  double depth(const Vec3& p) const;
  Vec2 project(const Vec3& p) const;
};

}  // namespace hoi
