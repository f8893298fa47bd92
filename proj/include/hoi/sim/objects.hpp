#pragma once

#include <string>
#include <vector>

#include "hoi/geom/mesh.hpp"

namespace hoi {

// Object template library. Templates are centered at their centroid;
// tracking estimates the rigid pose of the template.
//   box       0.35 x 0.25 x 0.22 m
//   rod       hexagonal prism, 0.9 m long
//   l_bracket asymmetric L of two box arms
//   board     0.4 x 0.4 square plate, 4-fold symmetric
TriMesh object_template(const std::string& id);  // throws UnknownTemplate

std::vector<std::string> object_template_ids();

// Subsampled vertex index set (deterministic stride) used by fitting terms.
std::vector<int> stride_indices(int count, int stride);

}  // namespace hoi
