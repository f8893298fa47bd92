#pragma once

#include <vector>

#include "hoi/geom/rotation.hpp"

namespace hoi {

struct SimTransform {
  double scale = 1.0;
  Rotation rot;
  Vec3 trans = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rot * p) + trans; }
  std::vector<Vec3> apply(const std::vector<Vec3>& pts) const;
};

// Similarity transform minimizing sum |s R x + t - y|^2 over corresponded
// point sets (Umeyama). Throws DegenerateInput for <3 points or
// collinear/duplicate configurations.
SimTransform procrustes_align(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

// Residual sum of squares attained by a transform; test helper.
double alignment_residual(const SimTransform& t, const std::vector<Vec3>& src,
                          const std::vector<Vec3>& dst);

}  // namespace hoi
