#include "hoi/fit/smplt.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hoi/parallel.hpp"
#include "hoi/sim/objects.hpp"

namespace hoi {

using json = nlohmann::json;

void FitConfig::validate() const {
  if (lambda_j2d < 0 || lambda_reg < 0 || lambda_a < 0 || lambda_pi < 0) {
    throw DegenerateInput("fit config: weights must be >= 0");
  }
  if (max_iters < 1) throw DegenerateInput("fit config: max_iters must be >= 1");
}

std::string FitConfig::to_json() const {
  json j;
  j["lambda_j2d"] = lambda_j2d;
  j["lambda_reg"] = lambda_reg;
  j["lambda_a"] = lambda_a;
  j["lambda_pi"] = lambda_pi;
  j["max_iters"] = max_iters;
  j["grad_tol"] = grad_tol;
  j["lr_rot"] = lr_rot;
  j["lr_trans"] = lr_trans;
  j["accel_vertex_stride"] = accel_vertex_stride;
  return j.dump(1);
}

FitConfig FitConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("fit config: invalid JSON");
  FitConfig c;
  c.lambda_j2d = j.value("lambda_j2d", c.lambda_j2d);
  c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
  c.lambda_a = j.value("lambda_a", c.lambda_a);
  c.lambda_pi = j.value("lambda_pi", c.lambda_pi);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.lr_rot = j.value("lr_rot", c.lr_rot);
  c.lr_trans = j.value("lr_trans", c.lr_trans);
  c.accel_vertex_stride = j.value("accel_vertex_stride", c.accel_vertex_stride);
  c.validate();
  return c;
}

BodyState SmplTTrajectory::state(int i) const {
  BodyState s;
  s.pose6d = pose6d[i];
  s.translation = translation[i];
  s.beta = beta;
  return s;
}

VecX SmplTTrajectory::theta(int i) const {
  VecX t(BodyModel::kThetaDim);
  t.head(BodyModel::kJoints * 6) = pose6d[i];
  t.tail(3) = translation[i];
  return t;
}

VecX SmplTTrajectory::pack() const {
  VecX p(frames() * BodyModel::kThetaDim);
  for (int i = 0; i < frames(); ++i) p.segment(i * BodyModel::kThetaDim, BodyModel::kThetaDim) = theta(i);
  return p;
}

void SmplTTrajectory::unpack(const VecX& params) {
  if (params.size() != frames() * BodyModel::kThetaDim) {
    throw LengthMismatch("trajectory: bad packed parameter size");
  }
  for (int i = 0; i < frames(); ++i) {
    const VecX t = params.segment(i * BodyModel::kThetaDim, BodyModel::kThetaDim);
    pose6d[i] = t.head(BodyModel::kJoints * 6);
    translation[i] = t.tail(3);
  }
}

SmplTTrajectory init_trajectory(const Sequence& seq, const BodyModel& model) {
  if (seq.init_body.empty()) {
    throw MissingInitialization("init_trajectory: sequence has no initial body estimates");
  }
  SmplTTrajectory traj;
  traj.beta = VecX::Zero(BodyModel::kBetaDim);
  for (const auto& s : seq.init_body) traj.beta += s.beta;
  traj.beta /= static_cast<double>(seq.frames());

  traj.pose6d.resize(seq.frames());
  traj.translation.resize(seq.frames());
  traj.flags.assign(seq.frames(), SmplTTrajectory::kInitialized);

  const Camera& cam = seq.camera;
  for (int i = 0; i < seq.frames(); ++i) {
    traj.pose6d[i] = seq.init_body[i].pose6d;

    // Joints of the initial pose at the origin; the translation solves the
    // (algebraic) reprojection constraints, i.e. depth from keypoint scale.
    BodyState local = seq.init_body[i];
    local.beta = traj.beta;
    local.translation = Vec3::Zero();
    const auto fk = model.forward(local, std::vector<int>{0});

    Mat3 ata = Mat3::Zero();
    Vec3 atb = Vec3::Zero();
    double total_conf = 0;
    auto add_constraints = [&](double weight) {
      for (int j = 0; j < BodyModel::kJoints; ++j) {
        const double c = weight > 0 ? seq.obs[i].confidence[j] : 1.0;
        if (weight > 0 && c <= 0) continue;
        const Vec3& x = fk.joints[j];
        const double u = seq.obs[i].keypoints(j, 0);
        const double v = seq.obs[i].keypoints(j, 1);
        Eigen::Matrix<double, 2, 3> a;
        a << cam.fx, 0, cam.cx - u, 0, cam.fy, cam.cy - v;
        Vec2 b(u * x.z() - cam.fx * x.x() - cam.cx * x.z(),
               v * x.z() - cam.fy * x.y() - cam.cy * x.z());
        ata += a.transpose() * a * c;
        atb += a.transpose() * b * c;
        total_conf += c;
      }
    };
    add_constraints(1.0);
    if (total_conf < 1e-9) {
      ata.setZero();
      atb.setZero();
      add_constraints(0.0);  // all keypoints dropped: fall back to unweighted
    }
    const Vec3 t = ata.ldlt().solve(atb);
    traj.translation[i] = t.allFinite() ? t : Vec3(0, 0, 3.0);
  }
  return traj;
}

namespace {

struct FrameEval {
  BodyModel::FkResult fk;
  double j2d = 0, reg = 0, pi = 0;
};

}  // namespace

double e_smplt(const SmplTTrajectory& traj, const Sequence& seq, const BodyModel& model,
               const FitConfig& cfg, VecX* grad) {
  cfg.validate();
  const int t_count = traj.frames();
  if (t_count != seq.frames()) throw LengthMismatch("e_smplt: trajectory/sequence length mismatch");
  if (seq.init_body.empty()) throw MissingInitialization("e_smplt: missing initial poses");
  const std::vector<int> accel_sub = stride_indices(model.vertex_count(), cfg.accel_vertex_stride);

  std::vector<FrameEval> evals(t_count);
  std::vector<VecX> frame_grads;
  if (grad) frame_grads.assign(t_count, VecX());

  // Pass 1: FK and per-frame terms.
  parallel_for(t_count, [&](std::ptrdiff_t i) {
    FrameEval& ev = evals[i];
    ev.fk = model.forward(traj.state(static_cast<int>(i)), accel_sub);
    for (int j = 0; j < BodyModel::kJoints; ++j) {
      const double c = seq.obs[i].confidence[j];
      if (c <= 0) continue;
      const Vec3& p = ev.fk.joints[j];
      if (p.z() <= 0.05) continue;  // behind-camera joints contribute nothing
      const Vec2 px = seq.camera.project(p);
      const Vec2 res = px - Vec2(seq.obs[i].keypoints(j, 0), seq.obs[i].keypoints(j, 1));
      ev.j2d += c * res.squaredNorm();
    }
    for (int j = 0; j < BodyModel::kJoints; ++j) {
      const double a = rotation_angle_rad(ev.fk.r_local[j]);
      ev.reg += a * a;
    }
    ev.pi += (traj.pose6d[i] - seq.init_body[i].pose6d).squaredNorm();
  });

  // Acceleration over subsampled vertices.
  double accel = 0;
  for (int i = 0; i + 2 < t_count; ++i) {
    const auto& v0 = evals[i].fk.mesh.vertices;
    const auto& v1 = evals[i + 1].fk.mesh.vertices;
    const auto& v2 = evals[i + 2].fk.mesh.vertices;
    for (size_t k = 0; k < v0.size(); ++k) accel += (v0[k] - 2 * v1[k] + v2[k]).squaredNorm();
  }

  double j2d = 0, reg = 0, pi = 0;
  for (const auto& ev : evals) {
    j2d += ev.j2d;
    reg += ev.reg;
    pi += ev.pi;
  }
  const double energy =
      cfg.lambda_j2d * j2d + cfg.lambda_reg * reg + cfg.lambda_a * accel + cfg.lambda_pi * pi;

  if (grad) {
    parallel_for(t_count, [&](std::ptrdiff_t i) {
      const auto& fk = evals[i].fk;
      std::vector<Vec3> g_joints(BodyModel::kJoints, Vec3::Zero());
      std::vector<Vec3> g_verts(accel_sub.size(), Vec3::Zero());

      for (int j = 0; j < BodyModel::kJoints; ++j) {
        const double c = seq.obs[i].confidence[j];
        if (c <= 0) continue;
        const Vec3& p = fk.joints[j];
        if (p.z() <= 0.05) continue;
        const Vec2 px = seq.camera.project(p);
        const Vec2 res = px - Vec2(seq.obs[i].keypoints(j, 0), seq.obs[i].keypoints(j, 1));
        g_joints[j] += cfg.lambda_j2d * 2.0 * c *
                       (seq.camera.project_jacobian(p).transpose() * res);
      }

      // Acceleration stencils touching frame i.
      for (int s = static_cast<int>(i) - 2; s <= static_cast<int>(i); ++s) {
        if (s < 0 || s + 2 >= t_count) continue;
        const double coef = (static_cast<int>(i) == s + 1) ? -2.0 : 1.0;
        const auto& v0 = evals[s].fk.mesh.vertices;
        const auto& v1 = evals[s + 1].fk.mesh.vertices;
        const auto& v2 = evals[s + 2].fk.mesh.vertices;
        for (size_t k = 0; k < g_verts.size(); ++k) {
          g_verts[k] += cfg.lambda_a * 2.0 * coef * (v0[k] - 2 * v1[k] + v2[k]);
        }
      }

      VecX g_theta = VecX::Zero(BodyModel::kThetaDim);
      VecX g_beta = VecX::Zero(BodyModel::kBetaDim);
      const BodyState st = traj.state(static_cast<int>(i));
      model.backward(st, fk, g_joints, g_verts, g_theta, g_beta);

      // Pose prior: d(angle^2)/dR = -(angle / sin angle) * I, then through
      // the 6D decode.
      for (int j = 0; j < BodyModel::kJoints; ++j) {
        const double a = rotation_angle_rad(fk.r_local[j]);
        const double factor = a < 1e-7 ? 1.0 : a / std::max(std::sin(a), 1e-9);
        const Mat3 g_rot = -cfg.lambda_reg * factor * Mat3::Identity();
        Vec6 g6 = Vec6::Zero();
        rot6d_backward(st.pose6d.segment<6>(j * 6), g_rot, g6);
        g_theta.segment<6>(j * 6) += g6;
      }
      g_theta.head(BodyModel::kJoints * 6) +=
          cfg.lambda_pi * 2.0 * (traj.pose6d[i] - seq.init_body[i].pose6d);
      frame_grads[i] = g_theta;
    });
    grad->resize(t_count * BodyModel::kThetaDim);
    for (int i = 0; i < t_count; ++i) {
      grad->segment(i * BodyModel::kThetaDim, BodyModel::kThetaDim) = frame_grads[i];
    }
  }
  return energy;
}

SmplTTrajectory fit_smplt(const Sequence& seq, const BodyModel& model, const FitConfig& cfg,
                          OptResult* opt_result) {
  cfg.validate();
  SmplTTrajectory traj = init_trajectory(seq, model);

  VecX params = traj.pack();
  AdamOptions opts;
  opts.lr.resize(params.size());
  for (int i = 0; i < traj.frames(); ++i) {
    opts.lr.segment(i * BodyModel::kThetaDim, BodyModel::kJoints * 6).setConstant(cfg.lr_rot);
    opts.lr.segment(i * BodyModel::kThetaDim + BodyModel::kJoints * 6, 3).setConstant(cfg.lr_trans);
  }
  opts.max_iters = cfg.max_iters;
  opts.grad_tol = cfg.grad_tol;
  opts.record_trace = false;

  SmplTTrajectory work = traj;
  auto energy = [&](const VecX& x, VecX& g) {
    work.unpack(x);
    return e_smplt(work, seq, model, cfg, &g);
  };
  const OptResult res = adam_minimize(params, energy, opts);
  if (opt_result) *opt_result = res;

  traj.unpack(params);
  for (auto& f : traj.flags) f |= SmplTTrajectory::kOptimized;
  return traj;
}

SmplTTrajectory smooth_trajectory(const SmplTTrajectory& traj, int window) {
  if (window < 1 || window > traj.frames()) {
    throw DegenerateInput("smooth_trajectory: window must be in [1, frames]");
  }
  if (window % 2 == 0) throw DegenerateInput("smooth_trajectory: window must be odd");
  if (window == 1) return traj;
  SmplTTrajectory out = traj;
  const int t_count = traj.frames();
  const int h = window / 2;
  auto reflect = [&](int i) {
    if (i < 0) i = -i - 1;
    if (i >= t_count) i = 2 * t_count - i - 1;
    return std::clamp(i, 0, t_count - 1);
  };
  for (int i = 0; i < t_count; ++i) {
    VecX pose = VecX::Zero(traj.pose6d[0].size());
    Vec3 trans = Vec3::Zero();
    for (int k = -h; k <= h; ++k) {
      const int s = reflect(i + k);
      pose += traj.pose6d[s];
      trans += traj.translation[s];
    }
    out.pose6d[i] = pose / window;
    out.translation[i] = trans / window;
    out.flags[i] |= SmplTTrajectory::kSmoothed;
  }
  return out;
}

}  // namespace hoi
