#pragma once

#include <vector>

#include "hoi/geom/bvh.hpp"

namespace hoi {

struct UdfResult {
  double dist = 0;
  Vec3 closest = Vec3::Zero();
  // (p - closest) / dist off-surface; zero and flagged on-surface.
  Vec3 grad = Vec3::Zero();
  bool on_surface = false;
};

// Exact unsigned distance to a triangle set, accelerated query.
UdfResult udf_query(const TriBvh& bvh, const Vec3& p);
// Convenience wrapper that builds the tree; fine for one-off queries.
UdfResult udf_query(const TriMesh& mesh, const Vec3& p);

// Brute-force O(#triangles) reference, kept for tests and benchmarks.
UdfResult udf_query_brute(const TriMesh& mesh, const Vec3& p);

// Batched queries; OpenMP-parallel over points, per-index writes.
std::vector<UdfResult> udf_query_batch(const TriBvh& bvh, const std::vector<Vec3>& points);

}  // namespace hoi
