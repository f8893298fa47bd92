#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hoi/fit/smplt.hpp"
#include "hoi/sim/simulate.hpp"
#include "test_util.hpp"

using namespace hoi;

namespace {

const BodyModel& model() {
  static const BodyModel m = BodyModel::make_default();
  return m;
}

InteractionScript script_with_noise(double kp_sigma, uint64_t seed, double dur = 2.0) {
  InteractionScript s;
  s.program = "carry_box";
  s.template_id = "box";
  s.duration_s = dur;
  s.seed = seed;
  s.noise.keypoint_sigma_px = kp_sigma;
  s.noise.confidence_dropout = 0.0;
  s.noise.init_pose_sigma = kp_sigma > 0 ? 0.02 : 0.0;
  s.noise.init_beta_sigma = 0.0;
  return s;
}

// Constant-velocity synthetic sequence: fixed pose, linear translation.
Sequence constant_velocity_sequence(int frames) {
  Sequence seq;
  seq.fps = 30;
  seq.template_id = "box";
  seq.program = "carry_box";
  seq.seed = 0;
  seq.camera = Camera{};
  BodyState base;
  base.pose6d.segment<6>(0) = Rotation::about_y(kPi).to_6d();
  for (int i = 0; i < frames; ++i) {
    BodyState s = base;
    s.translation = Vec3(0.002 * i, 0, 3.0 + 0.004 * i);
    seq.gt_body.push_back(s);
    seq.gt_object.push_back({Rotation::identity(), Vec3(0, 0, 3)});
    seq.gt_vis.push_back(1.0);
    seq.unoccluded_object.emplace_back(seq.camera.height, seq.camera.width);
    FrameObservation o;
    o.human_mask = Mask(seq.camera.height, seq.camera.width);
    o.object_mask = Mask(seq.camera.height, seq.camera.width);
    o.keypoints.resize(BodyModel::kJoints, 2);
    o.confidence = VecX::Ones(BodyModel::kJoints);
    const auto px = model().project_joints(s, seq.camera);
    for (int j = 0; j < BodyModel::kJoints; ++j) {
      o.keypoints(j, 0) = px[j].x();
      o.keypoints(j, 1) = px[j].y();
    }
    seq.obs.push_back(std::move(o));
    BodyState init = s;
    init.translation = Vec3::Zero();
    seq.init_body.push_back(init);
  }
  return seq;
}

double relative_translation_rms(const SmplTTrajectory& traj, const Sequence& seq) {
  double sum = 0;
  int n = 0;
  for (int i = 0; i + 1 < seq.frames(); ++i) {
    const Vec3 fit_step = traj.translation[i + 1] - traj.translation[i];
    const Vec3 gt_step = seq.gt_body[i + 1].translation - seq.gt_body[i].translation;
    sum += (fit_step - gt_step).squaredNorm();
    ++n;
  }
  return std::sqrt(sum / n);
}

}  // namespace

TEST_CASE("adam converges on a quadratic and keeps energy monotone") {
  VecX x = VecX::Constant(4, 5.0);
  AdamOptions opt;
  opt.lr = VecX::Constant(4, 0.1);
  opt.max_iters = 2000;
  opt.grad_tol = 1e-6;
  const OptResult res = adam_minimize(
      x, [](const VecX& p, VecX& g) { g = 2.0 * p; return p.squaredNorm(); }, opt);
  CHECK(res.final_energy < 1e-4);
  CHECK(res.final_energy <= res.initial_energy);
  for (size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);

  VecX bad = VecX::Constant(1, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(adam_minimize(
      bad, [](const VecX& p, VecX& g) { g = p; return p.sum(); }, opt),
      NonFiniteEnergy);
}

TEST_CASE("init_trajectory recovers ground truth from noise-free input") {
  auto s = script_with_noise(0.0, 3);
  const Sequence seq = generate_sequence(s, model());
  const SmplTTrajectory traj = init_trajectory(seq, model());
  for (int i = 0; i < seq.frames(); ++i) {
    CHECK(traj.pose6d[i] == seq.gt_body[i].pose6d);
    CHECK((traj.translation[i] - seq.gt_body[i].translation).norm() < 1e-6);
  }
  CHECK((traj.beta - seq.gt_body[0].beta).norm() < 1e-12);

  // Deterministic.
  const SmplTTrajectory again = init_trajectory(seq, model());
  for (int i = 0; i < seq.frames(); ++i) CHECK(again.translation[i] == traj.translation[i]);

  Sequence no_init = seq;
  no_init.init_body.clear();
  CHECK_THROWS_AS(init_trajectory(no_init, model()), MissingInitialization);
}

TEST_CASE("init_trajectory shape is the mean of per-frame shapes") {
  auto s = script_with_noise(0.0, 7, 1.0);
  Sequence seq = generate_sequence(s, model());
  Rng rng(5);
  VecX mean = VecX::Zero(BodyModel::kBetaDim);
  for (auto& ib : seq.init_body) {
    for (int k = 0; k < ib.beta.size(); ++k) ib.beta[k] += rng.gaussian(0, 0.3);
    mean += ib.beta;
  }
  mean /= seq.frames();
  const SmplTTrajectory traj = init_trajectory(seq, model());
  CHECK((traj.beta - mean).norm() < 1e-12);
}

TEST_CASE("e_smplt is zero for ground truth with data terms only") {
  auto s = script_with_noise(0.0, 11, 1.0);
  const Sequence seq = generate_sequence(s, model());
  SmplTTrajectory traj = init_trajectory(seq, model());
  FitConfig cfg;
  cfg.lambda_reg = 0;
  cfg.lambda_pi = 0;
  cfg.lambda_a = 0;
  CHECK(e_smplt(traj, seq, model(), cfg, nullptr) < 1e-10);
}

TEST_CASE("e_smplt acceleration term vanishes for constant velocity") {
  const Sequence seq = constant_velocity_sequence(12);
  SmplTTrajectory traj = init_trajectory(seq, model());
  FitConfig cfg;
  cfg.lambda_reg = 0;
  cfg.lambda_pi = 0;
  // Exact init makes J2D zero; constant velocity makes acceleration zero.
  CHECK(e_smplt(traj, seq, model(), cfg, nullptr) < 1e-9);
}

TEST_CASE("e_smplt gradient matches central finite differences") {
  auto s = script_with_noise(1.0, 13, 0.2);
  const Sequence seq = generate_sequence(s, model());
  SmplTTrajectory traj = init_trajectory(seq, model());
  Rng rng(17);
  for (auto& p : traj.pose6d)
    for (int k = 0; k < p.size(); ++k) p[k] += rng.gaussian(0, 0.05);
  FitConfig cfg;
  cfg.accel_vertex_stride = 9;

  VecX grad;
  SmplTTrajectory work = traj;
  auto value = [&](const VecX& x) {
    work.unpack(x);
    return e_smplt(work, seq, model(), cfg, nullptr);
  };
  const double e0 = e_smplt(traj, seq, model(), cfg, &grad);
  CHECK(std::isfinite(e0));
  VecX params = traj.pack();
  const double floor = 1e-4 * (1.0 + grad.cwiseAbs().maxCoeff());
  const double h = 1e-5;
  for (int rep = 0; rep < 40; ++rep) {
    const int k = rng.uniform_int(0, static_cast<int>(params.size()) - 1);
    VecX hi = params, lo = params;
    hi[k] += h;
    lo[k] -= h;
    const double fd = (value(hi) - value(lo)) / (2 * h);
    CHECK(hoi::test::rel_err(grad[k], fd, floor) < 1e-4);
  }
}

TEST_CASE("e_smplt is invariant to time reversal") {
  auto s = script_with_noise(1.5, 19, 1.0);
  const Sequence seq = generate_sequence(s, model());
  SmplTTrajectory traj = init_trajectory(seq, model());
  const Sequence rseq = seq.reversed();
  SmplTTrajectory rtraj = traj;
  std::reverse(rtraj.pose6d.begin(), rtraj.pose6d.end());
  std::reverse(rtraj.translation.begin(), rtraj.translation.end());
  FitConfig cfg;
  const double a = e_smplt(traj, seq, model(), cfg, nullptr);
  const double b = e_smplt(rtraj, rseq, model(), cfg, nullptr);
  CHECK(std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(a)));
}

TEST_CASE("fit recovers translations on noise-free observations") {
  auto s = script_with_noise(0.0, 23, 1.5);
  const Sequence seq = generate_sequence(s, model());
  FitConfig cfg;
  cfg.max_iters = 120;
  OptResult res;
  const SmplTTrajectory traj = fit_smplt(seq, model(), cfg, &res);
  CHECK(res.final_energy <= res.initial_energy);
  for (int i = 0; i < seq.frames(); ++i) {
    CHECK((traj.translation[i] - seq.gt_body[i].translation).norm() < 0.01);
  }
  CHECK((traj.flags[0] & SmplTTrajectory::kOptimized) != 0);
}

TEST_CASE("temporal terms halve relative translation error under keypoint noise") {
  auto s = script_with_noise(2.0, 29, 4.0);
  const Sequence seq = generate_sequence(s, model());
  FitConfig full;
  full.max_iters = 250;
  const SmplTTrajectory traj_full = fit_smplt(seq, model(), full);

  FitConfig per_frame = full;
  per_frame.lambda_a = 0;
  per_frame.lambda_pi = 0;
  const SmplTTrajectory traj_pf = fit_smplt(seq, model(), per_frame);

  const double rms_full = relative_translation_rms(traj_full, seq);
  const double rms_pf = relative_translation_rms(traj_pf, seq);
  MESSAGE("relative translation RMS: full=", rms_full, " per-frame=", rms_pf);
  CHECK(rms_full * 1.5 < rms_pf);
}

TEST_CASE("smooth_trajectory reduces acceleration and handles edge cases") {
  auto s = script_with_noise(0.0, 31, 1.0);
  const Sequence seq = generate_sequence(s, model());
  const SmplTTrajectory base = init_trajectory(seq, model());

  // Constant trajectory unchanged.
  SmplTTrajectory constant = base;
  for (int i = 0; i < constant.frames(); ++i) {
    constant.pose6d[i] = base.pose6d[0];
    constant.translation[i] = base.translation[0];
  }
  const SmplTTrajectory sm = smooth_trajectory(constant, 5);
  for (int i = 0; i < sm.frames(); ++i) {
    CHECK((sm.pose6d[i] - constant.pose6d[0]).norm() < 1e-12);
    CHECK((sm.translation[i] - constant.translation[0]).norm() < 1e-12);
  }

  // window = 1 is the identity.
  const SmplTTrajectory same = smooth_trajectory(base, 1);
  for (int i = 0; i < base.frames(); ++i) CHECK(same.pose6d[i] == base.pose6d[i]);

  // Noisy trajectories: acceleration never increases (100 seeds).
  auto traj_accel = [](const SmplTTrajectory& t) {
    std::vector<VecX> series;
    for (int i = 0; i < t.frames(); ++i) {
      VecX v(t.pose6d[i].size() + 3);
      v << t.pose6d[i], t.translation[i];
      series.push_back(v);
    }
    return accel_loss(series);
  };
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    SmplTTrajectory noisy = base;
    for (int i = 0; i < noisy.frames(); ++i) {
      for (int k = 0; k < noisy.pose6d[i].size(); ++k) noisy.pose6d[i][k] += rng.gaussian(0, 0.05);
      noisy.translation[i] += rng.gaussian3(0.05);
    }
    const SmplTTrajectory smoothed = smooth_trajectory(noisy, 7);
    CHECK(traj_accel(smoothed) <= traj_accel(noisy));
    CHECK((smoothed.flags[0] & SmplTTrajectory::kSmoothed) != 0);
  }

  CHECK_THROWS_AS(smooth_trajectory(base, 4), DegenerateInput);
  CHECK_THROWS_AS(smooth_trajectory(base, base.frames() + 2), DegenerateInput);
}
