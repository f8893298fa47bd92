#pragma once

#include <vector>

#include "hoi/geom/procrustes.hpp"

namespace hoi {

// Per-frame vertex sets of a tracked sequence. `object` may be empty
// (body-only evaluation); when present its length must match `body`.
struct MeshTrack {
  std::vector<std::vector<Vec3>> body;
  std::vector<std::vector<Vec3>> object;

  int frames() const { return static_cast<int>(body.size()); }
};

struct WindowedErrors {
  // Chamfer distance per frame, meters.
  std::vector<double> body;
  std::vector<double> object;
};

// Sliding-window joint Procrustes evaluation: for each frame, one similarity
// alignment is estimated on the concatenated body+object vertices of the
// window centered on it (stride 1, edge windows clipped inside the
// sequence), applied to that frame, and Chamfer is reported separately for
// body and object. window_s * fps rounded to >= 1 frame; a 1-frame window
// reproduces per-frame alignment.
WindowedErrors windowed_procrustes_error(const MeshTrack& pred, const MeshTrack& gt,
                                         double window_s, double fps);

}  // namespace hoi
