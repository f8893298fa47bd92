#pragma once

#include <cstdint>
#include <vector>

#include "hoi/common.hpp"

namespace hoi {

// Row-major H x W x C feature grid.
struct Grid2D {
  int height = 0, width = 0, channels = 1;
  std::vector<double> data;

  Grid2D() = default;
  Grid2D(int h, int w, int c) : height(h), width(w), channels(c), data(size_t(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) { return data[(size_t(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(size_t(y) * width + x) * channels + c]; }
};

// Bilinear blend of the 4 neighbors, clamp-to-edge outside [0,W-1]x[0,H-1].
// uv is (u, v) = (x, y) in pixel units.
VecX bilinear_sample(const Grid2D& grid, const Vec2& uv);

// d(sample)/d(uv), C x 2. Piecewise constant between pixel centers.
MatX bilinear_sample_grad(const Grid2D& grid, const Vec2& uv);

// Binary raster mask.
struct Mask {
  int height = 0, width = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), data(size_t(h) * w, 0) {}

  uint8_t& at(int y, int x) { return data[size_t(y) * width + x]; }
  uint8_t at(int y, int x) const { return data[size_t(y) * width + x]; }
  int count() const;
  bool same_size(const Mask& o) const { return height == o.height && width == o.width; }
  bool operator==(const Mask& o) const = default;
};

// Exact Euclidean distance transform (Felzenszwalb-Huttenlocher): distance
// in pixels from each pixel to the nearest set pixel. Set pixels get 0; an
// empty mask yields +inf everywhere.
Grid2D distance_transform(const Mask& mask);

// Run-length encoding used by the sequence container.
std::vector<uint32_t> rle_encode(const Mask& mask);
Mask rle_decode(int height, int width, const std::vector<uint32_t>& runs);

// Sum of squared second differences along the series.
double accel_loss(const std::vector<VecX>& series);
double accel_loss_points(const std::vector<std::vector<Vec3>>& series);

}  // namespace hoi
