#pragma once

#include "hoi/geom/camera.hpp"
#include "hoi/geom/grid2d.hpp"
#include "hoi/geom/mesh.hpp"

namespace hoi {

// Perspective z-buffer of one mesh; +inf where nothing covers the pixel.
// Triangles touching the near plane (z <= 0.05) are skipped. Pixel centers
// sit at integer coordinates, matching Camera::project.
Grid2D rasterize_depth(const TriMesh& mesh, const Camera& cam);

Mask rasterize_mask(const TriMesh& mesh, const Camera& cam);

// Orthographic silhouette (triplane rendering).
Mask rasterize_ortho_mask(const TriMesh& mesh, const OrthoCamera& cam);

struct RenderMasks {
  Mask human;               // pixels where the body is the nearest surface
  Mask object;              // pixels where the object is the nearest surface
  Mask object_unoccluded;   // object rendered alone
};

// Joint z-buffered rasterization of body and object.
RenderMasks render_masks(const TriMesh& body, const TriMesh& object, const Camera& cam);

// Visible-pixel ratio: |object mask| / |unoccluded mask|; 0 when the
// unoccluded mask is empty (object out of frame).
double gt_visibility(const Mask& object_mask, const Mask& unoccluded_mask);

}  // namespace hoi
