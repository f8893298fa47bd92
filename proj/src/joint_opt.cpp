#include "hoi/opt/joint.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hoi/geom/chamfer.hpp"
#include "hoi/io/container.hpp"
#include "hoi/parallel.hpp"
#include "hoi/sim/objects.hpp"

namespace hoi {

using json = nlohmann::json;

void JointConfig::validate() const {
  if (lambda_reg < 0 || lambda_ah < 0 || lambda_h < 0 || lambda_p < 0 || lambda_o < 0 ||
      lambda_occ < 0 || lambda_ao < 0 || lambda_c < 0) {
    throw DegenerateInput("joint config: weights must be >= 0");
  }
  if (contact_eps <= 0) throw DegenerateInput("joint config: contact_eps must be > 0");
  if (delta_h <= 0 || delta_o <= 0) throw DegenerateInput("joint config: clamps must be > 0");
}

std::string JointConfig::to_json() const {
  json j;
  j["lambda_reg"] = lambda_reg;
  j["lambda_ah"] = lambda_ah;
  j["lambda_h"] = lambda_h;
  j["lambda_p"] = lambda_p;
  j["lambda_o"] = lambda_o;
  j["lambda_occ"] = lambda_occ;
  j["lambda_ao"] = lambda_ao;
  j["lambda_c"] = lambda_c;
  j["lambda_p_anneal"] = lambda_p_anneal;
  j["delta_h"] = delta_h;
  j["delta_o"] = delta_o;
  j["contact_eps"] = contact_eps;
  j["stage1_iters"] = stage1_iters;
  j["stage2_iters"] = stage2_iters;
  j["grad_tol"] = grad_tol;
  j["lr_rot"] = lr_rot;
  j["lr_trans"] = lr_trans;
  j["contact_refresh"] = contact_refresh;
  j["body_vertex_stride"] = body_vertex_stride;
  j["object_vertex_stride"] = object_vertex_stride;
  j["silhouette_mask_samples"] = silhouette_mask_samples;
  j["raster_silhouette"] = raster_silhouette;
  return j.dump(1);
}

JointConfig JointConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("joint config: invalid JSON");
  JointConfig c;
  c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
  c.lambda_ah = j.value("lambda_ah", c.lambda_ah);
  c.lambda_h = j.value("lambda_h", c.lambda_h);
  c.lambda_p = j.value("lambda_p", c.lambda_p);
  c.lambda_o = j.value("lambda_o", c.lambda_o);
  c.lambda_occ = j.value("lambda_occ", c.lambda_occ);
  c.lambda_ao = j.value("lambda_ao", c.lambda_ao);
  c.lambda_c = j.value("lambda_c", c.lambda_c);
  c.lambda_p_anneal = j.value("lambda_p_anneal", c.lambda_p_anneal);
  c.delta_h = j.value("delta_h", c.delta_h);
  c.delta_o = j.value("delta_o", c.delta_o);
  c.contact_eps = j.value("contact_eps", c.contact_eps);
  c.stage1_iters = j.value("stage1_iters", c.stage1_iters);
  c.stage2_iters = j.value("stage2_iters", c.stage2_iters);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.lr_rot = j.value("lr_rot", c.lr_rot);
  c.lr_trans = j.value("lr_trans", c.lr_trans);
  c.contact_refresh = j.value("contact_refresh", c.contact_refresh);
  c.body_vertex_stride = j.value("body_vertex_stride", c.body_vertex_stride);
  c.object_vertex_stride = j.value("object_vertex_stride", c.object_vertex_stride);
  c.silhouette_mask_samples = j.value("silhouette_mask_samples", c.silhouette_mask_samples);
  c.raster_silhouette = j.value("raster_silhouette", c.raster_silhouette);
  c.validate();
  return c;
}

BodyState TrackState::body_state(int i) const {
  BodyState s = body[i];
  s.beta = beta;
  return s;
}

void TrackState::validate() const {
  const size_t t_count = body.size();
  if (visibility.size() != t_count) throw LengthMismatch("track state: visibility length");
  if (has_object && (obj_rot.size() != t_count || obj_trans.size() != t_count)) {
    throw LengthMismatch("track state: object track length");
  }
  for (const auto& s : body) {
    if (s.pose6d.size() != BodyModel::kJoints * 6) throw LengthMismatch("track state: pose size");
  }
}

namespace {
constexpr char kStateMagic[8] = {'H', 'O', 'I', 'S', 'T', 'A', 'T', '\0'};
constexpr uint32_t kStateVersion = 1;
}  // namespace

void save_track_state(const TrackState& state, const std::string& path) {
  state.validate();
  BinWriter w;
  w.u32(state.has_object ? 1 : 0);
  w.u32(static_cast<uint32_t>(state.frames()));
  w.vecx(state.beta);
  for (int i = 0; i < state.frames(); ++i) {
    w.vecx(state.body[i].pose6d);
    for (int k = 0; k < 3; ++k) w.f64(state.body[i].translation[k]);
    if (state.has_object) {
      const Mat3& m = state.obj_rot[i].matrix();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) w.f64(m(a, b));
      for (int k = 0; k < 3; ++k) w.f64(state.obj_trans[i][k]);
    }
    w.f64(state.visibility[i]);
  }
  std::string out(kStateMagic, sizeof kStateMagic);
  uint32_t version = kStateVersion;
  out.append(reinterpret_cast<const char*>(&version), sizeof version);
  out += w.buffer();
  write_file(path, out);
}

TrackState load_track_state(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < sizeof(kStateMagic) + 4) throw CorruptFile("track state: file too short");
  if (std::memcmp(buf.data(), kStateMagic, sizeof kStateMagic) != 0) {
    throw CorruptFile("track state: bad magic");
  }
  uint32_t version;
  std::memcpy(&version, buf.data() + sizeof kStateMagic, sizeof version);
  if (version != kStateVersion) throw VersionMismatch("track state: unsupported version");
  const std::string body = buf.substr(sizeof(kStateMagic) + 4);
  BinReader r(body);
  TrackState state;
  state.has_object = r.u32() != 0;
  const uint32_t t_count = r.u32();
  state.beta = r.vecx();
  for (uint32_t i = 0; i < t_count; ++i) {
    BodyState s;
    s.pose6d = r.vecx();
    for (int k = 0; k < 3; ++k) s.translation[k] = r.f64();
    s.beta = state.beta;
    state.body.push_back(std::move(s));
    if (state.has_object) {
      Mat3 m;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) m(a, b) = r.f64();
      state.obj_rot.push_back(Rotation::from_matrix_trusted(m));
      Vec3 t;
      for (int k = 0; k < 3; ++k) t[k] = r.f64();
      state.obj_trans.push_back(t);
    }
    state.visibility.push_back(r.f64());
  }
  if (!r.at_end()) throw CorruptFile("track state: trailing bytes");
  state.validate();
  return state;
}

ContactSets discover_contacts(const TrackState& state, const std::vector<FieldPtr>& fields,
                              const BodyModel& model, const TriMesh& object_template,
                              const JointConfig& cfg) {
  ContactSets sets;
  sets.frames.resize(state.frames());
  parallel_for(state.frames(), [&](std::ptrdiff_t i) {
    const auto& field = *fields[i];
    // Body vertices within eps of the object, grouped by their part label.
    const TriMesh body = model.forward(state.body_state(static_cast<int>(i))).mesh;
    for (int v = 0; v < body.vertex_count(); ++v) {
      if (field.object_udf(body.vertices[v]).dist <= cfg.contact_eps) {
        sets.frames[i][body.part_labels[v] - 1].body_vertices.push_back(v);
      }
    }
    // Object vertices within eps of the body, grouped by the part head.
    for (int v = 0; v < object_template.vertex_count(); ++v) {
      const Vec3 p = state.obj_rot[i] * object_template.vertices[v] + state.obj_trans[i];
      if (field.human_udf(p).dist <= cfg.contact_eps) {
        int label;
        field.part_probs(p, label);
        sets.frames[i][label - 1].object_vertices.push_back(v);
      }
    }
  });
  return sets;
}

double reg_term(const TrackState& state, const JointConfig& cfg, VecX* grad_theta,
                VecX* grad_beta) {
  double reg = 0;
  for (int i = 0; i < state.frames(); ++i) {
    for (int j = 0; j < BodyModel::kJoints; ++j) {
      const Rotation r = rot6d_to_matrix(state.body[i].pose6d.segment<6>(j * 6));
      const double a = rotation_angle_rad(r.matrix());
      reg += a * a;
      if (grad_theta) {
        const double factor = a < 1e-7 ? 1.0 : a / std::max(std::sin(a), 1e-9);
        const Mat3 g_rot = -cfg.lambda_reg * factor * Mat3::Identity();
        Vec6 g6 = Vec6::Zero();
        rot6d_backward(state.body[i].pose6d.segment<6>(j * 6), g_rot, g6);
        grad_theta->segment<6>(i * BodyModel::kThetaDim + j * 6) += g6;
      }
    }
  }
  reg += state.beta.squaredNorm();
  if (grad_beta) *grad_beta += cfg.lambda_reg * 2.0 * state.beta;
  return cfg.lambda_reg * reg;
}

double human_data_term(const TrackState& state, const std::vector<FieldPtr>& fields,
                       const BodyModel& model, const JointConfig& cfg, VecX* grad_theta,
                       VecX* grad_beta) {
  const int t_count = state.frames();
  if (static_cast<int>(fields.size()) != t_count) {
    throw LengthMismatch("human_data_term: field count mismatch");
  }
  const std::vector<int> subset = stride_indices(model.vertex_count(), cfg.body_vertex_stride);

  struct FrameOut {
    BodyModel::FkResult fk;
    double udf = 0, part = 0;
    std::vector<Vec3> g_verts;
  };
  std::vector<FrameOut> outs(t_count);

  parallel_for(t_count, [&](std::ptrdiff_t i) {
    FrameOut& out = outs[i];
    out.fk = model.forward(state.body_state(static_cast<int>(i)), subset);
    out.g_verts.assign(subset.size(), Vec3::Zero());
    const auto& field = *fields[i];
    for (size_t k = 0; k < subset.size(); ++k) {
      const Vec3& p = out.fk.mesh.vertices[k];
      const UdfResult udf = field.human_udf(p);
      if (udf.dist < cfg.delta_h) {
        out.udf += udf.dist;
        if (grad_theta && !udf.on_surface) out.g_verts[k] += cfg.lambda_h * udf.grad;
      } else {
        out.udf += cfg.delta_h;  // clamped: constant value, zero gradient
      }
      // Part cross entropy against the predefined vertex label.
      const int label = model.vertex_part[subset[k]];
      int pred_label;
      Vec3 g_ce = Vec3::Zero();
      const double ce = field.part_cross_entropy(p, label, grad_theta ? &g_ce : nullptr,
                                                 pred_label);
      out.part += ce;
      if (grad_theta) out.g_verts[k] += cfg.lambda_p * g_ce;
    }
  });

  double udf_sum = 0, part_sum = 0;
  for (const auto& o : outs) {
    udf_sum += o.udf;
    part_sum += o.part;
  }

  // Acceleration over the subsampled vertices.
  double accel = 0;
  for (int i = 0; i + 2 < t_count; ++i) {
    const auto& v0 = outs[i].fk.mesh.vertices;
    const auto& v1 = outs[i + 1].fk.mesh.vertices;
    const auto& v2 = outs[i + 2].fk.mesh.vertices;
    for (size_t k = 0; k < v0.size(); ++k) accel += (v0[k] - 2 * v1[k] + v2[k]).squaredNorm();
  }

  if (grad_theta) {
    std::vector<VecX> g_theta(t_count), g_beta_frames(t_count);
    parallel_for(t_count, [&](std::ptrdiff_t i) {
      std::vector<Vec3> g_verts = outs[i].g_verts;
      for (int s = static_cast<int>(i) - 2; s <= static_cast<int>(i); ++s) {
        if (s < 0 || s + 2 >= t_count) continue;
        const double coef = (static_cast<int>(i) == s + 1) ? -2.0 : 1.0;
        const auto& v0 = outs[s].fk.mesh.vertices;
        const auto& v1 = outs[s + 1].fk.mesh.vertices;
        const auto& v2 = outs[s + 2].fk.mesh.vertices;
        for (size_t k = 0; k < g_verts.size(); ++k) {
          g_verts[k] += cfg.lambda_ah * 2.0 * coef * (v0[k] - 2 * v1[k] + v2[k]);
        }
      }
      VecX gt = VecX::Zero(BodyModel::kThetaDim);
      VecX gb = VecX::Zero(BodyModel::kBetaDim);
      model.backward(state.body_state(static_cast<int>(i)), outs[i].fk, {}, g_verts, gt, gb);
      g_theta[i] = gt;
      g_beta_frames[i] = gb;
    });
    for (int i = 0; i < t_count; ++i) {
      grad_theta->segment(i * BodyModel::kThetaDim, BodyModel::kThetaDim) += g_theta[i];
      if (grad_beta) *grad_beta += g_beta_frames[i];
    }
  }
  return cfg.lambda_h * udf_sum + cfg.lambda_p * part_sum + cfg.lambda_ah * accel;
}

double object_data_term(const TrackState& state, const std::vector<FieldPtr>& fields,
                        const std::vector<SilhouetteContext>& silhouettes,
                        const TriMesh& object_template, const JointConfig& cfg, VecX* grad_obj) {
  const int t_count = state.frames();
  if (static_cast<int>(fields.size()) != t_count) {
    throw LengthMismatch("object_data_term: field count mismatch");
  }
  const std::vector<int> subset =
      stride_indices(object_template.vertex_count(), cfg.object_vertex_stride);

  struct FrameOut {
    std::vector<Vec3> verts;       // posed subsampled vertices
    std::vector<Vec3> g_verts;     // gradient on those vertices
    double udf = 0, sil = 0;
  };
  std::vector<FrameOut> outs(t_count);

  parallel_for(t_count, [&](std::ptrdiff_t i) {
    FrameOut& out = outs[i];
    const Mat3 rot = state.obj_rot[i].matrix();
    out.verts.resize(subset.size());
    for (size_t k = 0; k < subset.size(); ++k) {
      out.verts[k] = rot * object_template.vertices[subset[k]] + state.obj_trans[i];
    }
    out.g_verts.assign(subset.size(), Vec3::Zero());
    const double v_i = state.visibility[i];
    const auto& field = *fields[i];
    for (size_t k = 0; k < subset.size(); ++k) {
      const UdfResult udf = field.object_udf(out.verts[k]);
      if (udf.dist < cfg.delta_o) {
        out.udf += udf.dist;
        if (grad_obj && !udf.on_surface) out.g_verts[k] += v_i * cfg.lambda_o * udf.grad;
      } else {
        out.udf += cfg.delta_o;
      }
    }
    if (!silhouettes.empty()) {
      std::vector<Vec3> g_sil;
      out.sil = point_silhouette_loss(silhouettes[i], out.verts, grad_obj ? &g_sil : nullptr);
      if (grad_obj) {
        for (size_t k = 0; k < subset.size(); ++k) {
          out.g_verts[k] += v_i * cfg.lambda_occ * g_sil[k];
        }
      }
    }
  });

  double data = 0;
  for (int i = 0; i < t_count; ++i) {
    data += state.visibility[i] * (cfg.lambda_o * outs[i].udf + cfg.lambda_occ * outs[i].sil);
  }

  // Unweighted temporal smoothness on object vertices.
  double accel = 0;
  for (int i = 0; i + 2 < t_count; ++i) {
    for (size_t k = 0; k < outs[i].verts.size(); ++k) {
      accel +=
          (outs[i].verts[k] - 2 * outs[i + 1].verts[k] + outs[i + 2].verts[k]).squaredNorm();
    }
  }

  if (grad_obj) {
    std::vector<VecX> g_frames(t_count);
    parallel_for(t_count, [&](std::ptrdiff_t i) {
      std::vector<Vec3> g_verts = outs[i].g_verts;
      for (int s = static_cast<int>(i) - 2; s <= static_cast<int>(i); ++s) {
        if (s < 0 || s + 2 >= t_count) continue;
        const double coef = (static_cast<int>(i) == s + 1) ? -2.0 : 1.0;
        for (size_t k = 0; k < g_verts.size(); ++k) {
          g_verts[k] += cfg.lambda_ao * 2.0 * coef *
                        (outs[s].verts[k] - 2 * outs[s + 1].verts[k] + outs[s + 2].verts[k]);
        }
      }
      VecX g = VecX::Zero(9);
      Mat3 g_rot = Mat3::Zero();
      Vec3 g_trans = Vec3::Zero();
      for (size_t k = 0; k < g_verts.size(); ++k) {
        g_rot += g_verts[k] * object_template.vertices[subset[k]].transpose();
        g_trans += g_verts[k];
      }
      Vec6 g6 = Vec6::Zero();
      rot6d_backward(state.obj_rot[i].to_6d(), g_rot, g6);
      g.head<6>() = g6;
      g.tail<3>() = g_trans;
      g_frames[i] = g;
    });
    for (int i = 0; i < t_count; ++i) grad_obj->segment(i * 9, 9) += g_frames[i];
  }
  return data + cfg.lambda_ao * accel;
}

double contact_term(const TrackState& state, const ContactSets& sets, const BodyModel& model,
                    const TriMesh& object_template, const JointConfig& cfg, VecX* grad_obj) {
  const int t_count = state.frames();
  if (static_cast<int>(sets.frames.size()) != t_count) {
    throw LengthMismatch("contact_term: set count mismatch");
  }

  std::vector<double> values(t_count, 0.0);
  std::vector<VecX> g_frames(t_count);
  parallel_for(t_count, [&](std::ptrdiff_t i) {
    g_frames[i] = VecX::Zero(9);
    bool any = false;
    for (int j = 0; j < BodyModel::kParts; ++j) {
      any = any || (!sets.frames[i][j].body_vertices.empty() &&
                    !sets.frames[i][j].object_vertices.empty());
    }
    if (!any) return;

    const TriMesh body = model.forward(state.body_state(static_cast<int>(i))).mesh;
    const Mat3 rot = state.obj_rot[i].matrix();
    Mat3 g_rot = Mat3::Zero();
    Vec3 g_trans = Vec3::Zero();
    for (int j = 0; j < BodyModel::kParts; ++j) {
      const auto& fp = sets.frames[i][j];
      if (fp.body_vertices.empty() || fp.object_vertices.empty()) continue;
      std::vector<Vec3> h_pts, o_pts;
      for (int v : fp.body_vertices) h_pts.push_back(body.vertices[v]);
      for (int v : fp.object_vertices) {
        o_pts.push_back(rot * object_template.vertices[v] + state.obj_trans[i]);
      }
      // Symmetric chamfer with gradients on the object side only (the body
      // is fixed during the object stage).
      const double inv_h = 1.0 / h_pts.size();
      const double inv_o = 1.0 / o_pts.size();
      double cd = 0;
      for (const auto& h : h_pts) {
        double best = std::numeric_limits<double>::max();
        int best_k = -1;
        for (size_t k = 0; k < o_pts.size(); ++k) {
          const double d2 = (h - o_pts[k]).squaredNorm();
          if (d2 < best) {
            best = d2;
            best_k = static_cast<int>(k);
          }
        }
        const double d = std::sqrt(std::max(best, 1e-24));
        cd += 0.5 * inv_h * d;
        if (grad_obj && d > 1e-9) {
          const Vec3 g = 0.5 * inv_h * (o_pts[best_k] - h) / d * cfg.lambda_c;
          g_rot += g * object_template.vertices[fp.object_vertices[best_k]].transpose();
          g_trans += g;
        }
      }
      for (size_t k = 0; k < o_pts.size(); ++k) {
        double best = std::numeric_limits<double>::max();
        for (const auto& h : h_pts) best = std::min(best, (o_pts[k] - h).squaredNorm());
        const double d = std::sqrt(std::max(best, 1e-24));
        cd += 0.5 * inv_o * d;
        if (grad_obj && d > 1e-9) {
          Vec3 nearest = h_pts[0];
          double bd = std::numeric_limits<double>::max();
          for (const auto& h : h_pts) {
            const double d2 = (o_pts[k] - h).squaredNorm();
            if (d2 < bd) {
              bd = d2;
              nearest = h;
            }
          }
          const Vec3 g = 0.5 * inv_o * (o_pts[k] - nearest) / d * cfg.lambda_c;
          g_rot += g * object_template.vertices[fp.object_vertices[k]].transpose();
          g_trans += g;
        }
      }
      values[i] += cd;
    }
    if (grad_obj) {
      Vec6 g6 = Vec6::Zero();
      rot6d_backward(state.obj_rot[i].to_6d(), g_rot, g6);
      g_frames[i].head<6>() = g6;
      g_frames[i].tail<3>() = g_trans;
    }
  });

  double total = 0;
  for (int i = 0; i < t_count; ++i) {
    total += values[i];
    if (grad_obj) grad_obj->segment(i * 9, 9) += g_frames[i];
  }
  return cfg.lambda_c * total;
}

JointResult joint_optimize(const Sequence& seq, const std::vector<FieldPtr>& fields,
                           const TrackState& init, const BodyModel& model,
                           const JointConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.frames() != seq.frames()) throw LengthMismatch("joint_optimize: frame count mismatch");
  const TriMesh tmpl = object_template(seq.template_id);

  JointResult result;
  result.state = init;
  TrackState& state = result.state;

  // Stage 1: body pose and shape against the human data term + prior.
  {
    const int t_count = state.frames();
    const int dim = t_count * BodyModel::kThetaDim + BodyModel::kBetaDim;
    VecX params(dim);
    for (int i = 0; i < t_count; ++i) {
      params.segment(i * BodyModel::kThetaDim, BodyModel::kJoints * 6) = state.body[i].pose6d;
      params.segment(i * BodyModel::kThetaDim + BodyModel::kJoints * 6, 3) =
          state.body[i].translation;
    }
    params.tail(BodyModel::kBetaDim) = state.beta;

    AdamOptions opts;
    opts.lr.resize(dim);
    for (int i = 0; i < t_count; ++i) {
      opts.lr.segment(i * BodyModel::kThetaDim, BodyModel::kJoints * 6).setConstant(cfg.lr_rot);
      opts.lr.segment(i * BodyModel::kThetaDim + BodyModel::kJoints * 6, 3)
          .setConstant(cfg.lr_trans);
    }
    opts.lr.tail(BodyModel::kBetaDim).setConstant(cfg.lr_rot);
    opts.max_iters = cfg.stage1_iters;
    opts.grad_tol = cfg.grad_tol;

    TrackState work = state;
    auto energy = [&](const VecX& x, VecX& grad) {
      for (int i = 0; i < t_count; ++i) {
        work.body[i].pose6d = x.segment(i * BodyModel::kThetaDim, BodyModel::kJoints * 6);
        work.body[i].translation = x.segment(i * BodyModel::kThetaDim + BodyModel::kJoints * 6, 3);
      }
      work.beta = x.tail(BodyModel::kBetaDim);
      VecX g_theta = VecX::Zero(t_count * BodyModel::kThetaDim);
      VecX g_beta = VecX::Zero(BodyModel::kBetaDim);
      const double e_h = human_data_term(work, fields, model, cfg, &g_theta, &g_beta);
      const double e_reg = reg_term(work, cfg, &g_theta, &g_beta);
      grad.resize(dim);
      grad.head(t_count * BodyModel::kThetaDim) = g_theta;
      grad.tail(BodyModel::kBetaDim) = g_beta;
      return e_h + e_reg;
    };
    try {
      result.stage1 = adam_minimize(params, energy, opts);
    } catch (const NonFiniteEnergy& e) {
      throw NonFiniteEnergy(std::string("joint_optimize stage 1: ") + e.what());
    }
    for (int i = 0; i < t_count; ++i) {
      state.body[i].pose6d = params.segment(i * BodyModel::kThetaDim, BodyModel::kJoints * 6);
      state.body[i].translation =
          params.segment(i * BodyModel::kThetaDim + BodyModel::kJoints * 6, 3);
    }
    state.beta = params.tail(BodyModel::kBetaDim);
  }

  // Stage 2: object poses against the object and contact data terms.
  if (state.has_object) {
    const int t_count = state.frames();
    std::vector<SilhouetteContext> silhouettes(t_count);
    parallel_for(t_count, [&](std::ptrdiff_t i) {
      silhouettes[i] = SilhouetteContext::build(seq.obs[i].object_mask, seq.obs[i].human_mask,
                                                seq.camera, cfg.silhouette_mask_samples);
    });

    VecX params(t_count * 9);
    for (int i = 0; i < t_count; ++i) {
      params.segment<6>(i * 9) = state.obj_rot[i].to_6d();
      params.segment<3>(i * 9 + 6) = state.obj_trans[i];
    }
    AdamOptions opts;
    opts.lr.resize(t_count * 9);
    for (int i = 0; i < t_count; ++i) {
      opts.lr.segment<6>(i * 9).setConstant(cfg.lr_rot);
      opts.lr.segment<3>(i * 9 + 6).setConstant(cfg.lr_trans);
    }
    opts.grad_tol = cfg.grad_tol;

    TrackState work = state;
    ContactSets sets;
    auto energy = [&](const VecX& x, VecX& grad) {
      for (int i = 0; i < t_count; ++i) {
        work.obj_rot[i] = rot6d_to_matrix(x.segment<6>(i * 9));
        work.obj_trans[i] = x.segment<3>(i * 9 + 6);
      }
      grad = VecX::Zero(t_count * 9);
      const double e_o = object_data_term(work, fields, silhouettes, tmpl, cfg, &grad);
      const double e_c = contact_term(work, sets, model, tmpl, cfg, &grad);
      return e_o + e_c;
    };

    result.stage2.initial_energy = 0;
    bool first = true;
    int remaining = cfg.stage2_iters;
    while (remaining > 0) {
      // Contact sets are discrete: refreshed between chunks, never
      // differentiated through.
      for (int i = 0; i < t_count; ++i) {
        work.obj_rot[i] = rot6d_to_matrix(params.segment<6>(i * 9));
        work.obj_trans[i] = params.segment<3>(i * 9 + 6);
      }
      sets = discover_contacts(work, fields, model, tmpl, cfg);
      opts.max_iters = std::min(cfg.contact_refresh, remaining);
      OptResult chunk;
      try {
        chunk = adam_minimize(params, energy, opts);
      } catch (const NonFiniteEnergy& e) {
        throw NonFiniteEnergy(std::string("joint_optimize stage 2: ") + e.what());
      }
      if (first) {
        result.stage2.initial_energy = chunk.initial_energy;
        first = false;
      }
      result.stage2.final_energy = chunk.final_energy;
      result.stage2.iterations += chunk.iterations;
      result.stage2.converged = chunk.converged;
      result.stage2.hit_max_iters = chunk.hit_max_iters;
      result.stage2.trace.insert(result.stage2.trace.end(), chunk.trace.begin(),
                                 chunk.trace.end());
      remaining -= opts.max_iters;
      if (chunk.converged) break;
    }
    for (int i = 0; i < t_count; ++i) {
      state.obj_rot[i] = rot6d_to_matrix(params.segment<6>(i * 9));
      state.obj_trans[i] = params.segment<3>(i * 9 + 6);
    }
  }
  return result;
}

}  // namespace hoi
