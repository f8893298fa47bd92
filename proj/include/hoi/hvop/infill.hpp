#pragma once

#include "hoi/hvop/net.hpp"
#include "hoi/geom/rotation.hpp"

namespace hoi {

// Geodesic interpolation between flanking visible frames; leading/trailing
// gaps hold the nearest visible pose. Throws NoVisibleFrames.
std::vector<Rotation> slerp_infill(const std::vector<Rotation>& rots,
                                   const std::vector<uint8_t>& visible);

// Windowed chordal mean re-projected to SO(3); window odd, <= length.
// window=1 is the identity.
std::vector<Rotation> smooth_object_rotations(const std::vector<Rotation>& rots, int window);

// Autoregressive infilling over sliding windows (stride = window/2):
// earlier predictions become visible context for later windows. Visible
// frames pass through unchanged; occluded frames receive decoded network
// predictions. body_theta rows are full 147-vectors (rebased per window).
// Throws NoVisibleContext when a window has neither visible frames nor
// previous predictions.
std::vector<Rotation> infill_sequence(const HvopNet& net, const std::vector<VecX>& body_theta,
                                      const std::vector<Rotation>& rots,
                                      const std::vector<double>& visibility);

}  // namespace hoi
