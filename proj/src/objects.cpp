#include "hoi/sim/objects.hpp"

#include <map>

namespace hoi {

namespace {

// Grid-subdivided axis-aligned box. nx/ny/nz are cells per edge.
TriMesh subdivided_box(const Vec3& half, int nx, int ny, int nz, const Vec3& center) {
  TriMesh m;
  std::map<std::tuple<int, int, int>, int> index;
  auto vertex_at = [&](int ix, int iy, int iz) {
    const auto key = std::make_tuple(ix, iy, iz);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const Vec3 p(-half.x() + 2 * half.x() * ix / nx, -half.y() + 2 * half.y() * iy / ny,
                 -half.z() + 2 * half.z() * iz / nz);
    m.vertices.push_back(center + p);
    index[key] = static_cast<int>(m.vertices.size()) - 1;
    return index[key];
  };
  auto face = [&](int axis, bool positive) {
    const int nu = axis == 0 ? ny : nx;
    const int nv = axis == 2 ? ny : nz;
    for (int u = 0; u < nu; ++u) {
      for (int v = 0; v < nv; ++v) {
        auto corner = [&](int du, int dv) {
          int ix, iy, iz;
          if (axis == 0) {
            ix = positive ? nx : 0;
            iy = u + du;
            iz = v + dv;
          } else if (axis == 1) {
            iy = positive ? ny : 0;
            ix = u + du;
            iz = v + dv;
          } else {
            iz = positive ? nz : 0;
            ix = u + du;
            iy = v + dv;
          }
          return vertex_at(ix, iy, iz);
        };
        const int a = corner(0, 0), b = corner(1, 0), c = corner(1, 1), d = corner(0, 1);
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      }
    }
  };
  for (int axis = 0; axis < 3; ++axis) {
    face(axis, false);
    face(axis, true);
  }
  return m;
}

TriMesh hex_rod(double length, double radius, int rings) {
  TriMesh m;
  const int sides = 6;
  std::vector<std::vector<int>> ring_idx(rings + 1);
  for (int r = 0; r <= rings; ++r) {
    const double x = -length / 2 + length * r / rings;
    for (int s = 0; s < sides; ++s) {
      const double a = 2 * kPi * s / sides;
      m.vertices.emplace_back(x, radius * std::cos(a), radius * std::sin(a));
      ring_idx[r].push_back(static_cast<int>(m.vertices.size()) - 1);
    }
  }
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < sides; ++s) {
      const int sn = (s + 1) % sides;
      m.triangles.push_back({ring_idx[r][s], ring_idx[r + 1][s], ring_idx[r][sn]});
      m.triangles.push_back({ring_idx[r][sn], ring_idx[r + 1][s], ring_idx[r + 1][sn]});
    }
  }
  const int cap0 = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(-length / 2, 0, 0);
  const int cap1 = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(length / 2, 0, 0);
  for (int s = 0; s < sides; ++s) {
    const int sn = (s + 1) % sides;
    m.triangles.push_back({cap0, ring_idx[0][sn], ring_idx[0][s]});
    m.triangles.push_back({cap1, ring_idx[rings][s], ring_idx[rings][sn]});
  }
  return m;
}

void recenter(TriMesh& m) {
  const Vec3 c = m.centroid();
  for (auto& v : m.vertices) v -= c;
}

}  // namespace

TriMesh object_template(const std::string& id) {
  TriMesh m;
  if (id == "box") {
    m = subdivided_box(Vec3(0.175, 0.125, 0.11), 4, 3, 3, Vec3::Zero());
  } else if (id == "rod") {
    m = hex_rod(0.9, 0.025, 14);
  } else if (id == "l_bracket") {
    m = subdivided_box(Vec3(0.15, 0.04, 0.04), 5, 2, 2, Vec3::Zero());
    TriMesh arm = subdivided_box(Vec3(0.04, 0.11, 0.04), 2, 4, 2, Vec3(0.11, -0.15, 0.0));
    const int base = m.vertex_count();
    for (const auto& v : arm.vertices) m.vertices.push_back(v);
    for (auto t : arm.triangles) m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  } else if (id == "board") {
    m = subdivided_box(Vec3(0.2, 0.2, 0.0125), 6, 6, 1, Vec3::Zero());
  } else {
    throw UnknownTemplate("unknown object template: " + id);
  }
  recenter(m);
  m.validate();
  return m;
}

std::vector<std::string> object_template_ids() { return {"box", "rod", "l_bracket", "board"}; }

std::vector<int> stride_indices(int count, int stride) {
  std::vector<int> idx;
  if (stride < 1) stride = 1;
  idx.reserve(count / stride + 1);
  for (int i = 0; i < count; i += stride) idx.push_back(i);
  return idx;
}

}  // namespace hoi
