#include "hoi/geom/chamfer.hpp"

#include <limits>

#include "hoi/parallel.hpp"

namespace hoi {

double chamfer_one_sided(const std::vector<Vec3>& a, const KdTree& tree_b) {
  if (a.empty()) throw EmptyInput("chamfer: empty point set");
  std::vector<double> d(a.size());
  parallel_for(static_cast<std::ptrdiff_t>(a.size()),
               [&](std::ptrdiff_t i) { d[i] = tree_b.nearest(a[i]).dist; });
  double sum = 0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(a.size());
}

double chamfer_distance(const std::vector<Vec3>& a, const KdTree& tree_a,
                        const std::vector<Vec3>& b, const KdTree& tree_b) {
  return 0.5 * (chamfer_one_sided(a, tree_b) + chamfer_one_sided(b, tree_a));
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw EmptyInput("chamfer: empty point set");
  KdTree ta(a), tb(b);
  return chamfer_distance(a, ta, b, tb);
}

double chamfer_distance_serial(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw EmptyInput("chamfer: empty point set");
  auto one_sided = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double sum = 0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::max();
      for (const auto& q : to) best = std::min(best, (p - q).squaredNorm());
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (one_sided(a, b) + one_sided(b, a));
}

}  // namespace hoi
