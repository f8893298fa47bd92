#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hoi/geom/chamfer.hpp"
#include "hoi/geom/grid2d.hpp"
#include "hoi/geom/procrustes.hpp"
#include "hoi/geom/rotation.hpp"
#include "hoi/geom/udf.hpp"
#include "hoi/geom/windowed_error.hpp"
#include "test_util.hpp"

using namespace hoi;
using hoi::test::make_box;
using hoi::test::random_points;

TEST_CASE("rot6d decode of canonical identity") {
  Vec6 r6;
  r6 << 1, 0, 0, 0, 1, 0;
  CHECK((rot6d_to_matrix(r6).matrix() - Mat3::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("rot6d round-trips a 90 degree z-rotation") {
  const Rotation r = Rotation::about_z(kPi / 2);
  const Rotation back = rot6d_to_matrix(r.to_6d());
  CHECK((back.matrix() - r.matrix()).norm() < 1e-9);
}

TEST_CASE("rot6d decode yields valid rotations on random input") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    Vec6 r6;
    for (int k = 0; k < 6; ++k) r6[k] = rng.uniform(-2, 2);
    if (r6.head<3>().norm() < 1e-6) continue;
    Rotation r = rot6d_to_matrix(r6);
    CHECK((r.matrix().transpose() * r.matrix() - Mat3::Identity()).norm() < 1e-9);
    CHECK(r.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("rot6d rejects parallel and near-zero columns") {
  Vec6 zero;
  zero << 0, 0, 0, 0, 1, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(zero), DegenerateInput);
  Vec6 par;
  par << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(par), DegenerateInput);
}

TEST_CASE("rot6d backward matches finite differences") {
  Rng rng(7);
  for (int it = 0; it < 200; ++it) {
    Vec6 r6;
    for (int k = 0; k < 6; ++k) r6[k] = rng.uniform(-2, 2);
    if (r6.head<3>().norm() < 0.1) continue;
    const Vec3 b1 = r6.head<3>().normalized();
    if ((r6.tail<3>() - b1.dot(r6.tail<3>()) * b1).norm() < 0.1) continue;
    Mat3 w;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) w(a, b) = rng.uniform(-1, 1);
    auto f = [&](const Vec6& x) { return (w.array() * rot6d_to_matrix(x).matrix().array()).sum(); };
    Vec6 grad = Vec6::Zero();
    rot6d_backward(r6, w, grad);
    for (int k = 0; k < 6; ++k) {
      Vec6 hi = r6, lo = r6;
      hi[k] += 1e-6;
      lo[k] -= 1e-6;
      const double fd = (f(hi) - f(lo)) / 2e-6;
      CHECK(hoi::test::rel_err(grad[k], fd) < 1e-4);
    }
  }
}

TEST_CASE("symmetric orthogonalization is idempotent on SO(3)") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Rotation r = random_rotation(rng);
    CHECK((symmetric_orthogonalize(r.matrix()).matrix() - r.matrix()).norm() < 1e-9);
  }
}

TEST_CASE("symmetric orthogonalization removes scaling") {
  CHECK((symmetric_orthogonalize(2.0 * Mat3::Identity()).matrix() - Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("symmetric orthogonalization beats random rotations in Frobenius norm") {
  Rng rng(11);
  const Rotation base = random_rotation(rng);
  Mat3 noisy = base.matrix();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) noisy(a, b) += rng.gaussian(0, 0.05);
  const Rotation proj = symmetric_orthogonalize(noisy);
  const double best = (proj.matrix() - noisy).norm();
  for (int i = 0; i < 10000; ++i) {
    const Rotation r = random_rotation(rng);
    CHECK(best <= (r.matrix() - noisy).norm() + 1e-12);
  }
}

TEST_CASE("symmetric orthogonalization rejects rank-deficient input") {
  Mat3 m = Mat3::Zero();
  m(0, 0) = 1.0;
  CHECK_THROWS_AS(symmetric_orthogonalize(m), DegenerateInput);
}

TEST_CASE("slerp endpoints and midpoint") {
  Rng rng(5);
  const Rotation r = random_rotation(rng);
  CHECK(rotation_angle_error_deg(slerp(r, r, 0.5), r) < 1e-9);
  const Rotation mid = slerp(Rotation::identity(), Rotation::about_z(kPi / 2), 0.5);
  CHECK((mid.matrix() - Rotation::about_z(kPi / 4).matrix()).norm() < 1e-9);
}

TEST_CASE("slerp has constant angular velocity") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Rotation a = random_rotation(rng);
    const Rotation b = random_rotation(rng);
    const double total = rotation_angle_error_deg(a, b);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Rotation s = slerp(a, b, t);
      // arccos conditioning limits tiny angles to ~1e-6 deg accuracy
      CHECK(std::abs(rotation_angle_error_deg(s, a) - t * total) < 1e-5 + 1e-7 * total);
    }
    const Rotation mid = slerp(a, b, 0.5);
    CHECK(std::abs(rotation_angle_error_deg(mid, a) - rotation_angle_error_deg(mid, b)) < 1e-7 * 180);
  }
}

TEST_CASE("rotation angle error basics") {
  Rng rng(23);
  const Rotation r = random_rotation(rng);
  CHECK(rotation_angle_error_deg(r, r) == doctest::Approx(0.0));
  CHECK(rotation_angle_error_deg(Rotation::identity(), Rotation::about_x(deg2rad(30))) ==
        doctest::Approx(30.0).epsilon(1e-6));
  for (int i = 0; i < 100; ++i) {
    const Rotation a = random_rotation(rng), b = random_rotation(rng);
    CHECK(rotation_angle_error_deg(a, b) == doctest::Approx(rotation_angle_error_deg(b, a)));
  }
}

TEST_CASE("procrustes recovers identity and constructed transforms") {
  Rng rng(31);
  const auto src = random_points(rng, 40);
  const SimTransform id = procrustes_align(src, src);
  CHECK(alignment_residual(id, src, src) < 1e-18);

  SimTransform gt;
  gt.scale = 2.0;
  gt.rot = Rotation::about_z(kPi / 2);
  gt.trans = Vec3(1, 2, 3);
  const auto dst = gt.apply(src);
  const SimTransform rec = procrustes_align(src, dst);
  CHECK(std::abs(rec.scale - 2.0) < 1e-7);
  CHECK((rec.rot.matrix() - gt.rot.matrix()).norm() < 1e-7);
  CHECK((rec.trans - gt.trans).norm() < 1e-7);
}

TEST_CASE("procrustes residual is optimal against random transforms") {
  Rng rng(37);
  const auto src = random_points(rng, 30);
  std::vector<Vec3> dst(src.size());
  for (size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * 1.3 + Vec3(0.1, 0, -0.2) + rng.gaussian3(0.05);
  const SimTransform best = procrustes_align(src, dst);
  const double best_res = alignment_residual(best, src, dst);
  for (int i = 0; i < 1000; ++i) {
    SimTransform t;
    t.scale = rng.uniform(0.5, 2.5);
    t.rot = random_rotation(rng);
    t.trans = rng.gaussian3(0.5);
    CHECK(best_res <= alignment_residual(t, src, dst) + 1e-12);
  }
}

TEST_CASE("procrustes residual invariant to pre-applied similarity on src") {
  Rng rng(41);
  const auto src = random_points(rng, 25);
  std::vector<Vec3> dst(src.size());
  for (size_t i = 0; i < src.size(); ++i) dst[i] = src[i] + rng.gaussian3(0.1);
  const double base = alignment_residual(procrustes_align(src, dst), src, dst);
  SimTransform pre;
  pre.scale = 0.7;
  pre.rot = random_rotation(rng);
  pre.trans = Vec3(3, -1, 2);
  const auto src2 = pre.apply(src);
  const double res2 = alignment_residual(procrustes_align(src2, dst), src2, dst);
  CHECK(res2 == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("procrustes rejects degenerate input") {
  std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  CHECK_THROWS_AS(procrustes_align(line, line), DegenerateInput);
  std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(procrustes_align(two, two), DegenerateInput);
}

namespace {

MeshTrack jittered_track(const MeshTrack& base, Rng& rng, double depth_jitter) {
  MeshTrack out = base;
  for (auto& frame : out.body) {
    const double dz = rng.uniform(-depth_jitter, depth_jitter);
    for (auto& v : frame) v.z() += dz;
  }
  return out;
}

MeshTrack make_track(Rng& rng, int frames, int verts) {
  MeshTrack t;
  const auto cloud = random_points(rng, verts, 0.5);
  for (int i = 0; i < frames; ++i) {
    std::vector<Vec3> f(cloud);
    const Vec3 offset(0.01 * i, 0, 2.0 + 0.005 * i);
    for (auto& v : f) v += offset;
    t.body.push_back(f);
  }
  return t;
}

}  // namespace

TEST_CASE("windowed procrustes: exact prediction gives zero error") {
  Rng rng(51);
  const MeshTrack gt = make_track(rng, 40, 30);
  for (double w : {1.0 / 30.0, 0.5, 10.0}) {
    const auto err = windowed_procrustes_error(gt, gt, w, 30.0);
    for (double e : err.body) CHECK(e < 1e-9);
  }
}

TEST_CASE("windowed procrustes: whole-sequence rigid offset is absorbed at every window") {
  Rng rng(53);
  const MeshTrack gt = make_track(rng, 40, 30);
  MeshTrack pred = gt;
  const Rotation r = Rotation::about_y(0.3);
  for (auto& frame : pred.body) {
    for (auto& v : frame) v = r * v + Vec3(0.5, -0.2, 0.1);
  }
  for (double w : {1.0 / 30.0, 10.0}) {
    const auto err = windowed_procrustes_error(pred, gt, w, 30.0);
    for (double e : err.body) CHECK(e < 1e-6);
  }
}

TEST_CASE("windowed procrustes: per-frame depth jitter is hidden at w=1 and exposed at w=10s") {
  Rng rng(59);
  const MeshTrack gt = make_track(rng, 120, 40);
  const MeshTrack pred = jittered_track(gt, rng, 0.10);
  const auto per_frame = windowed_procrustes_error(pred, gt, 1.0 / 30.0, 30.0);
  const auto windowed = windowed_procrustes_error(pred, gt, 10.0, 30.0);
  double mean_pf = 0, mean_w = 0;
  for (double e : per_frame.body) mean_pf += e;
  for (double e : windowed.body) mean_w += e;
  mean_pf /= per_frame.body.size();
  mean_w /= windowed.body.size();
  CHECK(mean_pf < 0.001);
  CHECK(mean_w > 0.02);
}

TEST_CASE("windowed procrustes: 1-frame window equals per-frame alignment") {
  Rng rng(61);
  const MeshTrack gt = make_track(rng, 20, 25);
  const MeshTrack pred = jittered_track(gt, rng, 0.05);
  const auto a = windowed_procrustes_error(pred, gt, 1.0 / 30.0, 30.0);
  for (int i = 0; i < gt.frames(); ++i) {
    const SimTransform t = procrustes_align(pred.body[i], gt.body[i]);
    const double e = chamfer_distance(t.apply(pred.body[i]), gt.body[i]);
    CHECK(std::abs(a.body[i] - e) < 1e-12);
  }
}

TEST_CASE("windowed procrustes rejects mismatched tracks") {
  Rng rng(67);
  const MeshTrack a = make_track(rng, 10, 20);
  MeshTrack b = make_track(rng, 11, 20);
  CHECK_THROWS_AS(windowed_procrustes_error(a, b, 1.0, 30.0), LengthMismatch);
}

TEST_CASE("chamfer basics") {
  std::vector<Vec3> a = {{0, 0, 0}};
  std::vector<Vec3> b = {{0.7, 0, 0}};
  CHECK(chamfer_distance(a, a) == doctest::Approx(0.0));
  CHECK(chamfer_distance(a, b) == doctest::Approx(0.7));
  CHECK_THROWS_AS(chamfer_distance({}, b), EmptyInput);
}

TEST_CASE("chamfer matches brute-force oracle") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_points(rng, 100);
    const auto b = random_points(rng, 100);
    CHECK(std::abs(chamfer_distance(a, b) - chamfer_distance_serial(a, b)) < 1e-12);
  }
}

TEST_CASE("udf on the unit cube") {
  const TriMesh cube = make_box(Vec3(0.5, 0.5, 0.5));
  TriBvh bvh(cube);
  const auto on_vertex = udf_query(bvh, cube.vertices[0]);
  CHECK(on_vertex.dist == doctest::Approx(0.0));
  CHECK(on_vertex.on_surface);
  const auto above = udf_query(bvh, Vec3(0, 0, 1));
  CHECK(above.dist == doctest::Approx(0.5));
  CHECK((above.closest - Vec3(0, 0, 0.5)).norm() < 1e-12);
}

TEST_CASE("udf matches brute force and has unit finite-difference gradients") {
  Rng rng(73);
  TriMesh mesh = make_box(Vec3(0.3, 0.2, 0.4));
  const Rotation r = random_rotation(rng);
  mesh.transform_in_place(r, Vec3(0.1, -0.2, 0.05));
  TriBvh bvh(mesh);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = random_points(rng, 1, 1.2)[0];
    const auto fast = udf_query(bvh, p);
    const auto brute = udf_query_brute(mesh, p);
    CHECK(std::abs(fast.dist - brute.dist) < 1e-12);
    if (fast.dist > 2e-3) {
      CHECK(fast.grad.norm() == doctest::Approx(1.0).epsilon(1e-9));
      const double h = 1e-6;
      for (int k = 0; k < 3; ++k) {
        Vec3 hi = p, lo = p;
        hi[k] += h;
        lo[k] -= h;
        const double fd = (udf_query(bvh, hi).dist - udf_query(bvh, lo).dist) / (2 * h);
        CHECK(std::abs(fast.grad[k] - fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("bilinear sampling") {
  Grid2D g(4, 5, 2);
  Rng rng(79);
  for (auto& v : g.data) v = rng.uniform(-1, 1);
  const VecX exact = bilinear_sample(g, Vec2(3, 2));
  CHECK(exact[0] == doctest::Approx(g.at(2, 3, 0)));
  CHECK(exact[1] == doctest::Approx(g.at(2, 3, 1)));

  const VecX center = bilinear_sample(g, Vec2(1.5, 1.5));
  const double mean0 = 0.25 * (g.at(1, 1, 0) + g.at(1, 2, 0) + g.at(2, 1, 0) + g.at(2, 2, 0));
  CHECK(center[0] == doctest::Approx(mean0));

  Grid2D ramp(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = 2.0 * x - 0.5 * y + 1.0;
  for (int i = 0; i < 100; ++i) {
    const Vec2 uv(rng.uniform(0, 7), rng.uniform(0, 7));
    CHECK(bilinear_sample(ramp, uv)[0] ==
          doctest::Approx(2.0 * uv.x() - 0.5 * uv.y() + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("accel loss") {
  std::vector<VecX> constant(5, VecX::Constant(3, 2.0));
  CHECK(accel_loss(constant) == doctest::Approx(0.0));
  std::vector<VecX> linear;
  for (int i = 0; i < 6; ++i) linear.push_back(VecX::Constant(2, 0.3 * i));
  CHECK(accel_loss(linear) == doctest::Approx(0.0));
  std::vector<VecX> kink = {VecX::Zero(1), VecX::Zero(1), VecX::Constant(1, 1.0)};
  CHECK(accel_loss(kink) == doctest::Approx(1.0));
  CHECK_THROWS_AS(accel_loss({VecX::Zero(1)}), LengthMismatch);
}

TEST_CASE("distance transform matches brute force on random masks") {
  Rng rng(83);
  Mask m(16, 20);
  for (auto& v : m.data) v = rng.uniform() < 0.1 ? 1 : 0;
  if (m.count() == 0) m.at(3, 4) = 1;
  const Grid2D dt = distance_transform(m);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double best = 1e18;
      for (int yy = 0; yy < m.height; ++yy)
        for (int xx = 0; xx < m.width; ++xx)
          if (m.at(yy, xx)) best = std::min(best, std::hypot(double(x - xx), double(y - yy)));
      CHECK(dt.at(y, x, 0) == doctest::Approx(best).epsilon(1e-9));
    }
  }
}

TEST_CASE("mask RLE round trip") {
  Rng rng(89);
  Mask m(32, 24);
  for (auto& v : m.data) v = rng.uniform() < 0.4 ? 1 : 0;
  CHECK(rle_decode(m.height, m.width, rle_encode(m)) == m);
  auto runs = rle_encode(m);
  runs.pop_back();
  CHECK_THROWS_AS(rle_decode(m.height, m.width, runs), CorruptFile);
}
