#include "hoi/geom/grid2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoi {

namespace {

inline void clamp_uv(const Grid2D& g, const Vec2& uv, int& x0, int& y0, double& fx, double& fy) {
  const double u = std::clamp(uv.x(), 0.0, double(g.width - 1));
  const double v = std::clamp(uv.y(), 0.0, double(g.height - 1));
  x0 = std::min(int(std::floor(u)), g.width - 2 >= 0 ? g.width - 2 : 0);
  y0 = std::min(int(std::floor(v)), g.height - 2 >= 0 ? g.height - 2 : 0);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  fx = u - x0;
  fy = v - y0;
}

}  // namespace

VecX bilinear_sample(const Grid2D& grid, const Vec2& uv) {
  if (grid.width < 1 || grid.height < 1) throw EmptyInput("bilinear_sample: empty grid");
  int x0, y0;
  double fx, fy;
  clamp_uv(grid, uv, x0, y0, fx, fy);
  const int x1 = std::min(x0 + 1, grid.width - 1);
  const int y1 = std::min(y0 + 1, grid.height - 1);
  VecX out(grid.channels);
  for (int c = 0; c < grid.channels; ++c) {
    const double v00 = grid.at(y0, x0, c), v01 = grid.at(y0, x1, c);
    const double v10 = grid.at(y1, x0, c), v11 = grid.at(y1, x1, c);
    out[c] = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
  }
  return out;
}

MatX bilinear_sample_grad(const Grid2D& grid, const Vec2& uv) {
  int x0, y0;
  double fx, fy;
  clamp_uv(grid, uv, x0, y0, fx, fy);
  const int x1 = std::min(x0 + 1, grid.width - 1);
  const int y1 = std::min(y0 + 1, grid.height - 1);
  MatX out(grid.channels, 2);
  const bool inside_u = uv.x() > 0.0 && uv.x() < grid.width - 1;
  const bool inside_v = uv.y() > 0.0 && uv.y() < grid.height - 1;
  for (int c = 0; c < grid.channels; ++c) {
    const double v00 = grid.at(y0, x0, c), v01 = grid.at(y0, x1, c);
    const double v10 = grid.at(y1, x0, c), v11 = grid.at(y1, x1, c);
    out(c, 0) = inside_u ? (1 - fy) * (v01 - v00) + fy * (v11 - v10) : 0.0;
    out(c, 1) = inside_v ? (1 - fx) * (v10 - v00) + fx * (v11 - v01) : 0.0;
  }
  return out;
}

int Mask::count() const {
  int n = 0;
  for (uint8_t v : data) n += v ? 1 : 0;
  return n;
}

Grid2D distance_transform(const Mask& mask) {
  const double kInf = std::numeric_limits<double>::infinity();
  const int h = mask.height, w = mask.width;
  Grid2D out(h, w, 1);

  // 1D squared-distance lower envelope.
  auto dt1d = [](const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
      if (f[q] == std::numeric_limits<double>::infinity() &&
          f[v[k]] == std::numeric_limits<double>::infinity()) {
        continue;
      }
      double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      while (k > 0 && s <= z[k]) {
        --k;
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const double dq = q - v[k];
      d[q] = dq * dq + f[v[k]];
    }
  };

  // Columns then rows over squared distances.
  std::vector<double> f(std::max(h, w)), d(std::max(h, w));
  Grid2D sq(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) sq.at(y, x, 0) = mask.at(y, x) ? 0.0 : kInf;
  }
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = sq.at(y, x, 0);
    f.resize(h);
    d.resize(h);
    dt1d(f, d);
    for (int y = 0; y < h; ++y) sq.at(y, x, 0) = d[y];
    f.resize(std::max(h, w));
    d.resize(std::max(h, w));
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq.at(y, x, 0);
    f.resize(w);
    d.resize(w);
    dt1d(f, d);
    for (int x = 0; x < w; ++x) out.at(y, x, 0) = std::sqrt(d[x]);
    f.resize(std::max(h, w));
    d.resize(std::max(h, w));
  }
  return out;
}

std::vector<uint32_t> rle_encode(const Mask& mask) {
  // Alternating run lengths starting with a zero-run.
  std::vector<uint32_t> runs;
  uint8_t cur = 0;
  uint32_t len = 0;
  for (uint8_t v : mask.data) {
    const uint8_t b = v ? 1 : 0;
    if (b == cur) {
      ++len;
    } else {
      runs.push_back(len);
      cur = b;
      len = 1;
    }
  }
  runs.push_back(len);
  return runs;
}

Mask rle_decode(int height, int width, const std::vector<uint32_t>& runs) {
  Mask mask(height, width);
  size_t pos = 0;
  uint8_t cur = 0;
  for (uint32_t r : runs) {
    if (pos + r > mask.data.size()) throw CorruptFile("rle_decode: runs exceed mask size");
    std::fill(mask.data.begin() + pos, mask.data.begin() + pos + r, cur);
    pos += r;
    cur = cur ? 0 : 1;
  }
  if (pos != mask.data.size()) throw CorruptFile("rle_decode: runs do not cover mask");
  return mask;
}

double accel_loss(const std::vector<VecX>& series) {
  if (series.size() < 3) throw LengthMismatch("accel_loss: need at least 3 frames");
  const auto dim = series.front().size();
  double sum = 0;
  for (size_t i = 0; i + 2 < series.size(); ++i) {
    if (series[i].size() != dim || series[i + 1].size() != dim || series[i + 2].size() != dim) {
      throw LengthMismatch("accel_loss: inconsistent frame shapes");
    }
    sum += (series[i] - 2.0 * series[i + 1] + series[i + 2]).squaredNorm();
  }
  return sum;
}

double accel_loss_points(const std::vector<std::vector<Vec3>>& series) {
  if (series.size() < 3) throw LengthMismatch("accel_loss: need at least 3 frames");
  const size_t n = series.front().size();
  double sum = 0;
  for (size_t i = 0; i + 2 < series.size(); ++i) {
    if (series[i].size() != n || series[i + 1].size() != n || series[i + 2].size() != n) {
      throw LengthMismatch("accel_loss: inconsistent vertex counts");
    }
    for (size_t k = 0; k < n; ++k) {
      sum += (series[i][k] - 2.0 * series[i + 1][k] + series[i + 2][k]).squaredNorm();
    }
  }
  return sum;
}

}  // namespace hoi
