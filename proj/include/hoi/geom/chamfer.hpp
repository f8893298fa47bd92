#pragma once

#include <vector>

#include "hoi/geom/kdtree.hpp"

namespace hoi {

// Symmetric Chamfer distance between point sets:
// (mean_a min_b |a-b| + mean_b min_a |b-a|) / 2. Exact; kd-tree accelerated,
// OpenMP-parallel over points.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Variant reusing prebuilt trees (per-frame evaluation loops).
double chamfer_distance(const std::vector<Vec3>& a, const KdTree& tree_a,
                        const std::vector<Vec3>& b, const KdTree& tree_b);

// One-directional term: mean over a of distance to nearest b.
double chamfer_one_sided(const std::vector<Vec3>& a, const KdTree& tree_b);

// O(N*M) serial reference, kept for tests and the kernel benchmark.
double chamfer_distance_serial(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace hoi
