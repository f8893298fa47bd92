#include "hoi/geom/windowed_error.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "hoi/geom/chamfer.hpp"
#include "hoi/parallel.hpp"

namespace hoi {

namespace {

// Per-frame partial sums of the Umeyama statistics so window alignments can
// be assembled in O(1) from prefix sums.
struct FrameSums {
  double n = 0;
  Vec3 sx = Vec3::Zero();
  Vec3 sy = Vec3::Zero();
  Mat3 sxy = Mat3::Zero();  // sum of y x^T
  double sxx = 0;
};

void accumulate(FrameSums& s, const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  for (size_t i = 0; i < x.size(); ++i) {
    s.n += 1;
    s.sx += x[i];
    s.sy += y[i];
    s.sxy += y[i] * x[i].transpose();
    s.sxx += x[i].squaredNorm();
  }
}

SimTransform solve_from_sums(const FrameSums& s) {
  const double n = s.n;
  const Vec3 mu_x = s.sx / n;
  const Vec3 mu_y = s.sy / n;
  const Mat3 cov = s.sxy / n - mu_y * mu_x.transpose();
  const double var_x = s.sxx / n - mu_x.squaredNorm();
  if (var_x < 1e-18) throw DegenerateInput("windowed procrustes: source points coincide");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (d[1] < 1e-12 * std::max(1.0, d[0])) {
    throw DegenerateInput("windowed procrustes: degenerate point configuration");
  }
  Mat3 sgn = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) sgn(2, 2) = -1;

  SimTransform out;
  out.rot = Rotation::from_matrix_trusted(svd.matrixU() * sgn * svd.matrixV().transpose());
  out.scale = (d.asDiagonal().toDenseMatrix() * sgn).trace() / var_x;
  out.trans = mu_y - out.scale * (out.rot * mu_x);
  return out;
}

}  // namespace

WindowedErrors windowed_procrustes_error(const MeshTrack& pred, const MeshTrack& gt,
                                         double window_s, double fps) {
  const int t_count = pred.frames();
  if (t_count == 0) throw EmptyInput("windowed procrustes: empty track");
  if (gt.frames() != t_count) throw LengthMismatch("windowed procrustes: frame counts differ");
  const bool has_obj = !pred.object.empty();
  if (has_obj && (static_cast<int>(pred.object.size()) != t_count ||
                  static_cast<int>(gt.object.size()) != t_count)) {
    throw LengthMismatch("windowed procrustes: object track length mismatch");
  }
  const int wf = std::max(1, static_cast<int>(std::lround(window_s * fps)));
  if (window_s * fps < 1.0 - 1e-9) {
    throw DegenerateInput("windowed procrustes: window_s * fps must be >= 1");
  }

  std::vector<FrameSums> prefix(t_count + 1);
  for (int i = 0; i < t_count; ++i) {
    if (pred.body[i].size() != gt.body[i].size()) {
      throw LengthMismatch("windowed procrustes: body vertex counts differ");
    }
    FrameSums s = prefix[i];
    accumulate(s, pred.body[i], gt.body[i]);
    if (has_obj) {
      if (pred.object[i].size() != gt.object[i].size()) {
        throw LengthMismatch("windowed procrustes: object vertex counts differ");
      }
      accumulate(s, pred.object[i], gt.object[i]);
    }
    prefix[i + 1] = s;
  }

  auto window_sums = [&](int s, int e) {
    FrameSums out;
    out.n = prefix[e].n - prefix[s].n;
    out.sx = prefix[e].sx - prefix[s].sx;
    out.sy = prefix[e].sy - prefix[s].sy;
    out.sxy = prefix[e].sxy - prefix[s].sxy;
    out.sxx = prefix[e].sxx - prefix[s].sxx;
    return out;
  };

  WindowedErrors err;
  err.body.resize(t_count);
  if (has_obj) err.object.resize(t_count);

  std::vector<KdTree> gt_body_trees, gt_obj_trees;
  gt_body_trees.reserve(t_count);
  for (int i = 0; i < t_count; ++i) gt_body_trees.emplace_back(gt.body[i]);
  if (has_obj) {
    gt_obj_trees.reserve(t_count);
    for (int i = 0; i < t_count; ++i) gt_obj_trees.emplace_back(gt.object[i]);
  }

  parallel_for(t_count, [&](std::ptrdiff_t i) {
    int s = static_cast<int>(i) - wf / 2;
    s = std::max(0, std::min(s, t_count - wf));
    const int e = std::min(t_count, s + wf);
    const SimTransform align = solve_from_sums(window_sums(s, e));

    const std::vector<Vec3> body_al = align.apply(pred.body[i]);
    KdTree body_tree(body_al);
    err.body[i] = chamfer_distance(body_al, body_tree, gt.body[i], gt_body_trees[i]);
    if (has_obj) {
      const std::vector<Vec3> obj_al = align.apply(pred.object[i]);
      KdTree obj_tree(obj_al);
      err.object[i] = chamfer_distance(obj_al, obj_tree, gt.object[i], gt_obj_trees[i]);
    }
  });
  return err;
}

}  // namespace hoi
