#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "hoi/geom/chamfer.hpp"
#include "hoi/opt/joint.hpp"
#include "hoi/sim/objects.hpp"
#include "hoi/sim/raster.hpp"
#include "hoi/sim/simulate.hpp"
#include "test_util.hpp"

using namespace hoi;

namespace {

const BodyModel& model() {
  static const BodyModel m = BodyModel::make_default();
  return m;
}

struct Setup {
  Sequence seq;
  std::vector<FieldPtr> fields;
  TrackState gt_state;
};

Setup make_setup(uint64_t seed, double dur, const FieldNoiseConfig& noise, bool conditioning = true,
                 const char* program = "carry_box") {
  InteractionScript s;
  s.program = program;
  s.template_id = std::string(program) == "swing_rod" ? "rod" : "box";
  s.duration_s = dur;
  s.seed = seed;
  s.noise = NoiseConfig{0, 0, 0, 0};
  Setup out;
  out.seq = generate_sequence(s, model());
  out.fields = build_fields(out.seq, model(), noise, conditioning);
  TrackState st;
  st.beta = out.seq.gt_body[0].beta;
  for (int i = 0; i < out.seq.frames(); ++i) {
    st.body.push_back(out.seq.gt_body[i]);
    st.obj_rot.push_back(out.seq.gt_object[i].rot);
    st.obj_trans.push_back(out.seq.gt_object[i].trans);
    st.visibility.push_back(out.seq.gt_vis[i]);
  }
  out.gt_state = st;
  return out;
}

}  // namespace

TEST_CASE("human data term: zero at ground truth, clamped far away") {
  const Setup su = make_setup(3, 0.5, FieldNoiseConfig::zero());
  JointConfig cfg;
  cfg.lambda_ah = 0;
  cfg.lambda_p = 0;
  CHECK(human_data_term(su.gt_state, su.fields, model(), cfg, nullptr, nullptr) < 1e-9);

  // Every vertex beyond the clamp contributes the constant and no gradient.
  TrackState far = su.gt_state;
  for (auto& b : far.body) b.translation += Vec3(0, 0, 5.0);
  const std::vector<int> subset = stride_indices(model().vertex_count(), cfg.body_vertex_stride);
  const double expect = cfg.lambda_h * cfg.delta_h * subset.size() * su.seq.frames();
  VecX g_theta = VecX::Zero(su.seq.frames() * BodyModel::kThetaDim);
  VecX g_beta = VecX::Zero(BodyModel::kBetaDim);
  const double val = human_data_term(far, su.fields, model(), cfg, &g_theta, &g_beta);
  CHECK(val == doctest::Approx(expect));
  CHECK(g_theta.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("human data term gradient matches finite differences") {
  FieldNoiseConfig noise = FieldNoiseConfig::zero();
  const Setup su = make_setup(5, 0.2, noise);
  JointConfig cfg;
  cfg.body_vertex_stride = 9;
  Rng rng(7);
  TrackState state = su.gt_state;
  for (auto& b : state.body) {
    for (int k = 0; k < b.pose6d.size(); ++k) b.pose6d[k] += rng.gaussian(0, 0.03);
    b.translation += rng.gaussian3(0.03);
  }
  const int t_count = state.frames();
  const int dim = t_count * BodyModel::kThetaDim;
  VecX g_theta = VecX::Zero(dim);
  VecX g_beta = VecX::Zero(BodyModel::kBetaDim);
  human_data_term(state, su.fields, model(), cfg, &g_theta, &g_beta);

  auto value = [&](const TrackState& st) {
    return human_data_term(st, su.fields, model(), cfg, nullptr, nullptr);
  };
  const double floor = 1e-4 * (1.0 + g_theta.cwiseAbs().maxCoeff());
  const double h = 1e-6;
  int checked = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int frame = rng.uniform_int(0, t_count - 1);
    const int k = rng.uniform_int(0, BodyModel::kThetaDim - 1);
    TrackState hi = state, lo = state;
    if (k < BodyModel::kJoints * 6) {
      hi.body[frame].pose6d[k] += h;
      lo.body[frame].pose6d[k] -= h;
    } else {
      hi.body[frame].translation[k - BodyModel::kJoints * 6] += h;
      lo.body[frame].translation[k - BodyModel::kJoints * 6] -= h;
    }
    const double fd = (value(hi) - value(lo)) / (2 * h);
    const double an = g_theta[frame * BodyModel::kThetaDim + k];
    if (hoi::test::rel_err(an, fd, floor) < 1e-3) ++checked;
  }
  // Kinks of min(d, delta) and the kNN part sets can straddle a few probes.
  CHECK(checked >= 38);
}

TEST_CASE("object data term: v=0 leaves only smoothness; gradient check") {
  FieldNoiseConfig noise = FieldNoiseConfig::zero();
  const Setup su = make_setup(9, 0.4, noise);
  JointConfig cfg;
  const TriMesh tmpl = object_template("box");
  const int t_count = su.seq.frames();

  std::vector<SilhouetteContext> sil(t_count);
  for (int i = 0; i < t_count; ++i) {
    sil[i] = SilhouetteContext::build(su.seq.obs[i].object_mask, su.seq.obs[i].human_mask,
                                      su.seq.camera, cfg.silhouette_mask_samples);
  }

  // All-invisible: the data part vanishes, only lambda_ao * accel remains.
  TrackState zero_vis = su.gt_state;
  std::fill(zero_vis.visibility.begin(), zero_vis.visibility.end(), 0.0);
  const double only_smooth = object_data_term(zero_vis, su.fields, sil, tmpl, cfg, nullptr);
  std::vector<std::vector<Vec3>> tracks;
  const auto subset = stride_indices(tmpl.vertex_count(), cfg.object_vertex_stride);
  for (int i = 0; i < t_count; ++i) {
    std::vector<Vec3> v;
    for (int k : subset) v.push_back(zero_vis.obj_rot[i] * tmpl.vertices[k] + zero_vis.obj_trans[i]);
    tracks.push_back(v);
  }
  CHECK(only_smooth == doctest::Approx(cfg.lambda_ao * accel_loss_points(tracks)));

  // Ground truth on noise-free fields and masks: data parts near zero.
  JointConfig data_only = cfg;
  data_only.lambda_ao = 0;
  const double at_gt = object_data_term(su.gt_state, su.fields, sil, tmpl, data_only, nullptr);
  CHECK(at_gt < 1e-3);

  // Finite differences.
  Rng rng(11);
  TrackState state = su.gt_state;
  for (int i = 0; i < t_count; ++i) {
    state.obj_rot[i] = Rotation::exp(rng.unit_vector() * 0.05) * state.obj_rot[i];
    state.obj_trans[i] += rng.gaussian3(0.02);
  }
  VecX grad = VecX::Zero(t_count * 9);
  object_data_term(state, su.fields, sil, tmpl, cfg, &grad);
  auto value = [&](const TrackState& st) {
    return object_data_term(st, su.fields, sil, tmpl, cfg, nullptr);
  };
  const double floor = 1e-4 * (1.0 + grad.cwiseAbs().maxCoeff());
  const double h = 1e-6;
  int ok = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int frame = rng.uniform_int(0, t_count - 1);
    const int k = rng.uniform_int(0, 8);
    TrackState hi = state, lo = state;
    if (k < 6) {
      Vec6 r6 = state.obj_rot[frame].to_6d();
      Vec6 rh = r6, rl = r6;
      rh[k] += h;
      rl[k] -= h;
      hi.obj_rot[frame] = rot6d_to_matrix(rh);
      lo.obj_rot[frame] = rot6d_to_matrix(rl);
      // Re-encode through 6D: gradient is w.r.t. the 6D parameters.
      const double fd = (value(hi) - value(lo)) / (2 * h);
      if (hoi::test::rel_err(grad[frame * 9 + k], fd, floor) < 1e-3) ++ok;
    } else {
      hi.obj_trans[frame][k - 6] += h;
      lo.obj_trans[frame][k - 6] -= h;
      const double fd = (value(hi) - value(lo)) / (2 * h);
      if (hoi::test::rel_err(grad[frame * 9 + k], fd, floor) < 1e-3) ++ok;
    }
  }
  CHECK(ok >= 38);
}

TEST_CASE("rasterized occlusion-aware silhouette loss") {
  const Setup su = make_setup(13, 0.2, FieldNoiseConfig::zero());
  const TriMesh tmpl = object_template("box");
  const int frame = 3;
  const auto& obs = su.seq.obs[frame];
  const TriMesh posed =
      tmpl.transformed(su.seq.gt_object[frame].rot, su.seq.gt_object[frame].trans);

  // Exact match: the unoccluded part of the render is explained, and the
  // observed mask is covered.
  const double at_gt = occlusion_silhouette_loss(posed, obs.object_mask, obs.human_mask,
                                                 su.seq.camera);
  CHECK(at_gt < 0.02);

  // Fully hidden behind the human: every rendered pixel is excluded and the
  // observed mask is empty.
  Mask full_human(obs.human_mask.height, obs.human_mask.width);
  std::fill(full_human.data.begin(), full_human.data.end(), 1);
  CHECK(occlusion_silhouette_loss(posed, Mask(obs.human_mask.height, obs.human_mask.width),
                                  full_human, su.seq.camera) == doctest::Approx(0.0));

  // Sliding the object toward its mask decreases the loss monotonically.
  double prev = std::numeric_limits<double>::max();
  for (double off = 0.30; off >= 0.0; off -= 0.05) {
    TriMesh shifted = posed;
    shifted.translate_in_place(Vec3(off, 0, 0));
    const double v = occlusion_silhouette_loss(shifted, obs.object_mask, obs.human_mask,
                                               su.seq.camera);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }

  // Object behind the camera cannot rasterize.
  TriMesh behind = posed;
  behind.translate_in_place(Vec3(0, 0, -10));
  CHECK_THROWS_AS(
      occlusion_silhouette_loss(behind, obs.object_mask, obs.human_mask, su.seq.camera),
      EmptyRender);
}

TEST_CASE("contact term: empty sets, ground truth, perturbation, gradient") {
  const Setup su = make_setup(17, 0.4, FieldNoiseConfig::zero(), true, "swing_rod");
  const TriMesh tmpl = object_template("rod");
  JointConfig cfg;

  // Far-away object: no contacts anywhere.
  TrackState far = su.gt_state;
  for (auto& t : far.obj_trans) t += Vec3(0, 0, 2.0);
  const ContactSets none = discover_contacts(far, su.fields, model(), tmpl, cfg);
  CHECK(contact_term(far, none, model(), tmpl, cfg, nullptr) == doctest::Approx(0.0));

  // Ground truth on a contact frame: near zero, and the discovered parts
  // include the scripted contact part.
  const ContactSets sets = discover_contacts(su.gt_state, su.fields, model(), tmpl, cfg);
  const double at_gt = contact_term(su.gt_state, sets, model(), tmpl, cfg, nullptr);
  // Contact sets are eps-bands on either side of the interface, so the
  // per-frame chamfer at ground truth is bounded by eps plus mesh
  // discretization, not exactly zero.
  CHECK(at_gt / (cfg.lambda_c * su.seq.frames()) < 0.03);
  REQUIRE(!su.seq.contacts.empty());
  const int part = su.seq.contacts[0].part_id;
  int hits = 0;
  for (int i = 0; i < su.seq.frames(); ++i) {
    if (!sets.frames[i][part - 1].body_vertices.empty() &&
        !sets.frames[i][part - 1].object_vertices.empty()) {
      ++hits;
    }
  }
  CHECK(hits > su.seq.frames() / 2);

  // Pulling the object off the hand raises the term (sets held fixed).
  TrackState pulled = su.gt_state;
  for (auto& t : pulled.obj_trans) t += Vec3(0.05, 0, 0);
  CHECK(contact_term(pulled, sets, model(), tmpl, cfg, nullptr) > at_gt + 1e-6);

  // Finite differences with fixed sets.
  Rng rng(19);
  VecX grad = VecX::Zero(su.seq.frames() * 9);
  contact_term(pulled, sets, model(), tmpl, cfg, &grad);
  auto value = [&](const TrackState& st) {
    return contact_term(st, sets, model(), tmpl, cfg, nullptr);
  };
  const double floor = 1e-4 * (1.0 + grad.cwiseAbs().maxCoeff());
  const double h = 1e-6;
  int ok = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const int frame = rng.uniform_int(0, su.seq.frames() - 1);
    const int k = rng.uniform_int(0, 8);
    TrackState hi = pulled, lo = pulled;
    if (k < 6) {
      Vec6 r6 = pulled.obj_rot[frame].to_6d(), rh = r6, rl = r6;
      rh[k] += h;
      rl[k] -= h;
      hi.obj_rot[frame] = rot6d_to_matrix(rh);
      lo.obj_rot[frame] = rot6d_to_matrix(rl);
    } else {
      hi.obj_trans[frame][k - 6] += h;
      lo.obj_trans[frame][k - 6] -= h;
    }
    const double fd = (value(hi) - value(lo)) / (2 * h);
    if (hoi::test::rel_err(grad[frame * 9 + k], fd, floor) < 1e-3) ++ok;
  }
  CHECK(ok >= 28);  // chamfer argmin switches can straddle a probe
}

TEST_CASE("object gradients decouple across frames when lambda_c = 0") {
  const Setup su = make_setup(23, 0.4, FieldNoiseConfig::zero());
  const TriMesh tmpl = object_template("box");
  JointConfig cfg;
  cfg.lambda_c = 0;
  const int t_count = su.seq.frames();
  std::vector<SilhouetteContext> sil(t_count);
  for (int i = 0; i < t_count; ++i) {
    sil[i] = SilhouetteContext::build(su.seq.obs[i].object_mask, su.seq.obs[i].human_mask,
                                      su.seq.camera, cfg.silhouette_mask_samples);
  }
  VecX grad_a = VecX::Zero(t_count * 9);
  object_data_term(su.gt_state, su.fields, sil, tmpl, cfg, &grad_a);
  // Move one frame far beyond the accel stencil reach of frame 1.
  TrackState moved = su.gt_state;
  const int far_frame = 8;
  moved.obj_trans[far_frame] += Vec3(0.3, 0, 0);
  VecX grad_b = VecX::Zero(t_count * 9);
  object_data_term(moved, su.fields, sil, tmpl, cfg, &grad_b);
  CHECK((grad_a.segment(0 * 9, 9) - grad_b.segment(0 * 9, 9)).norm() == doctest::Approx(0.0));
  CHECK((grad_a.segment(1 * 9, 9) - grad_b.segment(1 * 9, 9)).norm() == doctest::Approx(0.0));
}

TEST_CASE("joint optimize: ground truth is a fixed point on noise-free fields") {
  const Setup su = make_setup(29, 1.0, FieldNoiseConfig::zero());
  JointConfig cfg;
  cfg.stage1_iters = 40;
  cfg.stage2_iters = 60;
  const JointResult res = joint_optimize(su.seq, su.fields, su.gt_state, model(), cfg);
  CHECK(res.stage1.final_energy <= res.stage1.initial_energy);

  const TriMesh tmpl = object_template("box");
  double worst_chamfer = 0, worst_rot = 0, worst_trans = 0;
  for (int i = 0; i < su.seq.frames(); ++i) {
    const auto fk_out = model().forward(res.state.body_state(i));
    const auto fk_gt = model().forward(su.gt_state.body_state(i));
    worst_chamfer =
        std::max(worst_chamfer, chamfer_distance(fk_out.mesh.vertices, fk_gt.mesh.vertices));
    worst_rot = std::max(worst_rot,
                         rotation_angle_error_deg(res.state.obj_rot[i], su.gt_state.obj_rot[i]));
    worst_trans =
        std::max(worst_trans, (res.state.obj_trans[i] - su.gt_state.obj_trans[i]).norm());
  }
  MESSAGE("fixed point drift: chamfer=", worst_chamfer, " rot=", worst_rot,
          " trans=", worst_trans);
  CHECK(worst_chamfer < 0.001);
  CHECK(worst_rot < 0.1);
  CHECK(worst_trans < 0.002);
}

TEST_CASE("joint optimize recovers a perturbed object under full visibility") {
  const Setup su = make_setup(31, 0.7, FieldNoiseConfig::zero());
  JointConfig cfg;
  cfg.stage1_iters = 10;
  cfg.stage2_iters = 400;
  TrackState init = su.gt_state;
  Rng rng(37);
  const Vec3 axis = rng.unit_vector();
  for (int i = 0; i < init.frames(); ++i) {
    init.obj_rot[i] = Rotation::exp(axis * deg2rad(20.0)) * init.obj_rot[i];
    init.obj_trans[i] += Vec3(0.06, -0.05, 0.06);
  }
  const JointResult res = joint_optimize(su.seq, su.fields, init, model(), cfg);
  double worst_rot = 0, worst_trans = 0;
  for (int i = 0; i < init.frames(); ++i) {
    worst_rot = std::max(worst_rot,
                         rotation_angle_error_deg(res.state.obj_rot[i], su.gt_state.obj_rot[i]));
    worst_trans =
        std::max(worst_trans, (res.state.obj_trans[i] - su.gt_state.obj_trans[i]).norm());
  }
  MESSAGE("recovery: rot=", worst_rot, " trans=", worst_trans);
  CHECK(worst_rot < 3.0);
  CHECK(worst_trans < 0.01);
}

TEST_CASE("track state container round trip") {
  const Setup su = make_setup(41, 0.2, FieldNoiseConfig::zero());
  const std::string path = "/tmp/hoi_test_state.bin";
  save_track_state(su.gt_state, path);
  const TrackState back = load_track_state(path);
  CHECK(back.frames() == su.gt_state.frames());
  for (int i = 0; i < back.frames(); ++i) {
    CHECK(back.body[i].pose6d == su.gt_state.body[i].pose6d);
    CHECK(back.body[i].translation == su.gt_state.body[i].translation);
    CHECK(back.obj_rot[i].matrix() == su.gt_state.obj_rot[i].matrix());
    CHECK(back.obj_trans[i] == su.gt_state.obj_trans[i]);
    CHECK(back.visibility[i] == su.gt_state.visibility[i]);
  }
  std::string buf = read_file(path);
  write_file(path, buf.substr(0, buf.size() / 3));
  CHECK_THROWS_AS(load_track_state(path), CorruptFile);
  std::remove(path.c_str());
}
