#include "hoi/body/body_model.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hoi/geom/rotation.hpp"

namespace hoi {

using json = nlohmann::json;

BodyState::BodyState() {
  pose6d.resize(BodyModel::kJoints * 6);
  for (int j = 0; j < BodyModel::kJoints; ++j) {
    pose6d.segment<6>(j * 6) << 1, 0, 0, 0, 1, 0;
  }
  beta = VecX::Zero(BodyModel::kBetaDim);
}

VecX BodyState::to_theta() const {
  VecX theta(BodyModel::kThetaDim);
  theta.head(BodyModel::kJoints * 6) = pose6d;
  theta.tail(3) = translation;
  return theta;
}

void BodyState::set_theta(const VecX& theta) {
  if (theta.size() != BodyModel::kThetaDim) throw LengthMismatch("BodyState: bad theta size");
  pose6d = theta.head(BodyModel::kJoints * 6);
  translation = theta.tail(3);
}

void BodyState::validate() const {
  if (pose6d.size() != BodyModel::kJoints * 6) throw LengthMismatch("BodyState: bad pose size");
  if (beta.size() != BodyModel::kBetaDim) throw LengthMismatch("BodyState: bad beta size");
  for (int j = 0; j < BodyModel::kJoints; ++j) {
    rot6d_to_matrix(pose6d.segment<6>(j * 6));  // throws if degenerate
  }
  if ((beta.array().abs() > 3.0 + 1e-12).any()) {
    throw DegenerateInput("BodyState: beta outside [-3, 3]");
  }
}

namespace {

// Joint layout: 0 pelvis, 1/2 hips, 3 spine1, 4/5 knees, 6 spine2,
// 7/8 ankles, 9 spine3, 10/11 feet, 12 neck, 13/14 collars, 15 head,
// 16/17 shoulders, 18/19 elbows, 20/21 wrists, 22/23 hands.
const char* kJointNames[BodyModel::kJoints] = {
    "pelvis", "l_hip", "r_hip", "spine1", "l_knee", "r_knee", "spine2", "l_ankle",
    "r_ankle", "spine3", "l_foot", "r_foot", "neck", "l_collar", "r_collar", "head",
    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist", "l_hand", "r_hand"};

const int kParent[BodyModel::kJoints] = {-1, 0, 0, 0, 1,  2,  3,  4,  5,  6,  7,  8,
                                         9,  9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

// Shape groups: 1 torso, 2 neck/head, 3 upper leg, 4 lower leg, 5 foot,
// 6 upper arm, 7 lower arm, 8 hand. beta[0] is global, beta[9] girth.
const int kOffsetGroup[BodyModel::kJoints] = {0, 3, 3, 1, 3, 3, 1, 4, 4, 1, 5, 5,
                                              2, 1, 1, 2, 6, 6, 6, 6, 7, 7, 8, 8};

// Per-segment capsule radius and part label, indexed by the segment's end
// joint (the child). Part ids: 1 torso, 2/3 up legs, 4/5 low legs, 6/7 feet,
// 8 head+neck, 9/10 up arms, 11/12 low arms, 13/14 hands.
const double kRadius[BodyModel::kJoints] = {0,     0.075, 0.075, 0.105, 0.065, 0.065,
                                            0.105, 0.048, 0.048, 0.10,  0.038, 0.038,
                                            0.045, 0.055, 0.055, 0.085, 0.05,  0.05,
                                            0.042, 0.042, 0.036, 0.036, 0.03,  0.03};
const int kSegmentPart[BodyModel::kJoints] = {0, 2, 3, 1, 2, 3, 1, 4, 5, 1, 6, 7,
                                              8, 1, 1, 8, 9, 10, 9, 10, 11, 12, 13, 14};

Vec3 rest_offset_of(int j) {
  switch (j) {
    case 1: return {+0.095, 0.045, 0};
    case 2: return {-0.095, 0.045, 0};
    case 3: return {0, -0.115, 0};
    case 4: return {0, 0.40, 0};
    case 5: return {0, 0.40, 0};
    case 6: return {0, -0.125, 0};
    case 7: return {0, 0.42, 0};
    case 8: return {0, 0.42, 0};
    case 9: return {0, -0.125, 0};
    case 10: return {0, 0.065, 0.13};
    case 11: return {0, 0.065, 0.13};
    case 12: return {0, -0.115, 0};
    case 13: return {+0.065, -0.075, 0};
    case 14: return {-0.065, -0.075, 0};
    case 15: return {0, -0.105, 0};
    case 16: return {+0.105, -0.015, 0};
    case 17: return {-0.105, -0.015, 0};
    case 18: return {+0.26, 0, 0};
    case 19: return {-0.26, 0, 0};
    case 20: return {+0.25, 0, 0};
    case 21: return {-0.25, 0, 0};
    case 22: return {+0.08, 0, 0};
    case 23: return {-0.08, 0, 0};
    default: return Vec3::Zero();
  }
}

constexpr int kRingSegments = 8;

}  // namespace

BodyModel BodyModel::make_default() {
  BodyModel m;
  m.parent.assign(kParent, kParent + kJoints);
  m.offset_group.assign(kOffsetGroup, kOffsetGroup + kJoints);
  m.joint_names.assign(kJointNames, kJointNames + kJoints);
  m.rest_offset.resize(kJoints);
  for (int j = 0; j < kJoints; ++j) m.rest_offset[j] = rest_offset_of(j);

  // One capsule per segment (child joint c, segment from parent[c] to c).
  for (int c = 1; c < kJoints; ++c) {
    const int top = m.parent[c];
    const double radius = kRadius[c];
    const int part = kSegmentPart[c];
    const Vec3 dir = m.rest_offset[c].normalized();
    Vec3 u = std::abs(dir.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 0, 1);
    u = (u - dir * dir.dot(u)).normalized();
    const Vec3 w = dir.cross(u);

    auto blend_for = [&](double t) {
      if (t < 0.7) return 0.0;
      const double s = std::clamp((t - 0.7) / 0.3, 0.0, 1.0);
      return 0.5 * s * s * (3 - 2 * s);
    };
    auto push_vertex = [&](double t, const Vec3& rvec) {
      VertexAnchor a;
      a.skin_joint = top;
      a.child_joint = c;
      a.t = t;
      a.rvec = rvec;
      a.radius = radius;
      const double bw = blend_for(t);
      if (bw > 0) {
        a.blend_joint = c;
        a.blend_w = bw;
      }
      m.anchors.push_back(a);
      m.vertex_part.push_back(part);
      return static_cast<int>(m.anchors.size()) - 1;
    };

    // Rings: top pole, top cap ring, 4 body rings, bottom cap ring, bottom pole.
    std::vector<std::vector<int>> rings;
    const int pole_top = push_vertex(0.0, -dir);
    const double cap_c = std::cos(kPi / 4), cap_s = std::sin(kPi / 4);
    auto make_ring = [&](double t, double ring_scale, double axial) {
      std::vector<int> ring(kRingSegments);
      for (int s = 0; s < kRingSegments; ++s) {
        const double ang = 2 * kPi * s / kRingSegments;
        const Vec3 rad = std::cos(ang) * u + std::sin(ang) * w;
        ring[s] = push_vertex(t, ring_scale * rad + axial * dir);
      }
      rings.push_back(ring);
      return ring;
    };
    make_ring(0.0, cap_c, -cap_s);
    for (int r = 0; r < 4; ++r) make_ring(r / 3.0, 1.0, 0.0);
    make_ring(1.0, cap_c, cap_s);
    const int pole_bot = push_vertex(1.0, dir);

    for (size_t r = 0; r + 1 < rings.size(); ++r) {
      for (int s = 0; s < kRingSegments; ++s) {
        const int sn = (s + 1) % kRingSegments;
        m.triangles.push_back({rings[r][s], rings[r + 1][s], rings[r][sn]});
        m.triangles.push_back({rings[r][sn], rings[r + 1][s], rings[r + 1][sn]});
      }
    }
    for (int s = 0; s < kRingSegments; ++s) {
      const int sn = (s + 1) % kRingSegments;
      m.triangles.push_back({pole_top, rings.front()[s], rings.front()[sn]});
      m.triangles.push_back({pole_bot, rings.back()[sn], rings.back()[s]});
    }
  }
  return m;
}

BodyModel::RestGeometry BodyModel::rest_geometry(const VecX& beta) const {
  RestGeometry g;
  g.scale.resize(kJoints, 1.0);
  g.radius_factor = std::exp(kRadiusGain * beta[9]);
  g.joints.resize(kJoints);
  g.joints[0] = Vec3::Zero();
  for (int j = 1; j < kJoints; ++j) {
    g.scale[j] = std::exp(kGlobalGain * beta[0] + kGroupGain * beta[offset_group[j]]);
    g.joints[j] = g.joints[parent[j]] + g.scale[j] * rest_offset[j];
  }
  g.vertices.resize(anchors.size());
  for (size_t i = 0; i < anchors.size(); ++i) {
    const auto& a = anchors[i];
    g.vertices[i] = g.joints[a.skin_joint] + a.t * g.scale[a.child_joint] * rest_offset[a.child_joint] +
                    g.radius_factor * a.radius * a.rvec;
  }
  return g;
}

BodyModel::FkResult BodyModel::forward(const BodyState& state,
                                       const std::vector<int>& subset) const {
  FkResult fk;
  fk.rest = rest_geometry(state.beta);
  fk.subset = subset;
  fk.r_local.resize(kJoints);
  fk.r_global.resize(kJoints);
  fk.joints.resize(kJoints);
  for (int j = 0; j < kJoints; ++j) {
    fk.r_local[j] = rot6d_to_matrix(state.pose6d.segment<6>(j * 6)).matrix();
  }
  fk.r_global[0] = fk.r_local[0];
  fk.joints[0] = state.translation;
  for (int j = 1; j < kJoints; ++j) {
    const int p = parent[j];
    fk.r_global[j] = fk.r_global[p] * fk.r_local[j];
    fk.joints[j] = fk.joints[p] + fk.r_global[p] * (fk.rest.scale[j] * rest_offset[j]);
  }

  auto skin = [&](size_t i) {
    const auto& a = anchors[i];
    const Vec3& vbar = fk.rest.vertices[i];
    Vec3 v = fk.r_global[a.skin_joint] * (vbar - fk.rest.joints[a.skin_joint]) +
             fk.joints[a.skin_joint];
    if (a.blend_joint >= 0) {
      const Vec3 v2 = fk.r_global[a.blend_joint] * (vbar - fk.rest.joints[a.blend_joint]) +
                      fk.joints[a.blend_joint];
      v = (1.0 - a.blend_w) * v + a.blend_w * v2;
    }
    return v;
  };
  if (subset.empty()) {
    fk.mesh.vertices.resize(anchors.size());
    for (size_t i = 0; i < anchors.size(); ++i) fk.mesh.vertices[i] = skin(i);
    fk.mesh.triangles = triangles;
    fk.mesh.part_labels = vertex_part;
  } else {
    fk.mesh.vertices.resize(subset.size());
    for (size_t k = 0; k < subset.size(); ++k) fk.mesh.vertices[k] = skin(subset[k]);
  }
  return fk;
}

void BodyModel::backward(const BodyState& state, const FkResult& fk,
                         const std::vector<Vec3>& grad_joints,
                         const std::vector<Vec3>& grad_vertices,
                         VecX& grad_theta, VecX& grad_beta) const {
  if (grad_theta.size() != kThetaDim) grad_theta = VecX::Zero(kThetaDim);
  if (grad_beta.size() != kBetaDim) grad_beta = VecX::Zero(kBetaDim);

  std::vector<Mat3> g_rot(kJoints, Mat3::Zero());   // adjoint of r_global
  std::vector<Vec3> g_pos(kJoints, Vec3::Zero());   // adjoint of posed joints
  std::vector<Vec3> g_rest(kJoints, Vec3::Zero());  // adjoint of rest joints
  std::vector<double> g_scale(kJoints, 0.0);
  double g_radius_factor = 0.0;

  if (!grad_joints.empty()) {
    for (int j = 0; j < kJoints; ++j) g_pos[j] += grad_joints[j];
  }
  if (!grad_vertices.empty()) {
    for (size_t k = 0; k < grad_vertices.size(); ++k) {
      const size_t i = fk.subset.empty() ? k : static_cast<size_t>(fk.subset[k]);
      const Vec3& gv = grad_vertices[k];
      if (gv.isZero()) continue;
      const auto& a = anchors[i];
      Vec3 g_vbar = Vec3::Zero();
      auto accumulate = [&](int joint, double w) {
        const Vec3 local = fk.rest.vertices[i] - fk.rest.joints[joint];
        g_rot[joint] += w * gv * local.transpose();
        g_pos[joint] += w * gv;
        const Vec3 back = fk.r_global[joint].transpose() * (w * gv);
        g_vbar += back;
        g_rest[joint] -= back;
      };
      accumulate(a.skin_joint, 1.0 - a.blend_w);
      if (a.blend_joint >= 0) accumulate(a.blend_joint, a.blend_w);
      // Rest vertex: v = rest_joint[skin] + t * scale_c * off_c + rf * r * rvec
      g_rest[a.skin_joint] += g_vbar;
      g_scale[a.child_joint] += a.t * rest_offset[a.child_joint].dot(g_vbar);
      g_radius_factor += a.radius * a.rvec.dot(g_vbar);
    }
  }

  // Posed chain, reverse topological order.
  for (int j = kJoints - 1; j >= 1; --j) {
    const int p = parent[j];
    const Vec3 off = fk.rest.scale[j] * rest_offset[j];
    g_pos[p] += g_pos[j];
    g_rot[p] += g_pos[j] * off.transpose();
    g_scale[j] += rest_offset[j].dot(fk.r_global[p].transpose() * g_pos[j]);
    g_rot[p] += g_rot[j] * fk.r_local[j].transpose();
    const Mat3 g_local = fk.r_global[p].transpose() * g_rot[j];
    Vec6 g6 = Vec6::Zero();
    rot6d_backward(state.pose6d.segment<6>(j * 6), g_local, g6);
    grad_theta.segment<6>(j * 6) += g6;
  }
  {
    Vec6 g6 = Vec6::Zero();
    rot6d_backward(state.pose6d.segment<6>(0), g_rot[0], g6);
    grad_theta.segment<6>(0) += g6;
    grad_theta.tail(3) += g_pos[0];
  }

  // Rest chain, reverse topological order.
  for (int j = kJoints - 1; j >= 1; --j) {
    const int p = parent[j];
    g_rest[p] += g_rest[j];
    g_scale[j] += rest_offset[j].dot(g_rest[j]);
  }
  for (int j = 1; j < kJoints; ++j) {
    const double gs = g_scale[j] * fk.rest.scale[j];
    grad_beta[0] += kGlobalGain * gs;
    grad_beta[offset_group[j]] += kGroupGain * gs;
  }
  grad_beta[9] += kRadiusGain * fk.rest.radius_factor * g_radius_factor;
}

std::vector<Vec2> BodyModel::project_joints(const BodyState& state, const Camera& cam) const {
  const FkResult fk = forward(state);
  std::vector<int> behind;
  for (int j = 0; j < kJoints; ++j) {
    if (fk.joints[j].z() <= 0.05) behind.push_back(j);
  }
  if (!behind.empty()) {
    std::ostringstream ss;
    ss << "project_joints: joints behind camera:";
    for (int j : behind) ss << " " << j;
    throw BehindCamera(ss.str());
  }
  std::vector<Vec2> px(kJoints);
  for (int j = 0; j < kJoints; ++j) px[j] = cam.project(fk.joints[j]);
  return px;
}

std::vector<int> BodyModel::part_vertices(int part_id) const {
  if (part_id < 1 || part_id > kParts) throw UnknownPart("part id out of range");
  std::vector<int> out;
  for (size_t i = 0; i < vertex_part.size(); ++i) {
    if (vertex_part[i] == part_id) out.push_back(static_cast<int>(i));
  }
  return out;
}

void BodyModel::validate() const {
  if (static_cast<int>(parent.size()) != kJoints) throw LengthMismatch("body: joint count");
  if (parent[0] != -1) throw DegenerateInput("body: root must have no parent");
  for (int j = 1; j < kJoints; ++j) {
    if (parent[j] < 0 || parent[j] >= j) throw DegenerateInput("body: parents must precede children");
  }
  for (int p = 1; p <= kParts; ++p) {
    if (part_vertices(p).empty()) throw DegenerateInput("body: empty part");
  }
  for (const auto& a : anchors) {
    if (a.blend_w < 0 || a.blend_w > 1) throw DegenerateInput("body: bad blend weight");
  }
  BodyState rest;
  TriMesh mesh = forward(rest).mesh;
  mesh.validate();
}

std::string BodyModel::to_json() const {
  json j;
  j["format"] = "hoi-body-model";
  j["version"] = 1;
  j["joints"] = kJoints;
  j["parts"] = kParts;
  j["parent"] = parent;
  j["joint_names"] = joint_names;
  j["offset_group"] = offset_group;
  json offs = json::array();
  for (const auto& o : rest_offset) offs.push_back({o.x(), o.y(), o.z()});
  j["rest_offset"] = offs;
  json an = json::array();
  for (const auto& a : anchors) {
    an.push_back({a.skin_joint, a.child_joint, a.t,
                  a.rvec.x(), a.rvec.y(), a.rvec.z(), a.radius, a.blend_joint, a.blend_w});
  }
  j["anchors"] = an;
  json tris = json::array();
  for (const auto& t : triangles) tris.push_back({t[0], t[1], t[2]});
  j["triangles"] = tris;
  j["vertex_part"] = vertex_part;
  return j.dump(1);
}

BodyModel BodyModel::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("body model: invalid JSON");
  if (j.value("format", "") != "hoi-body-model") throw CorruptFile("body model: wrong format tag");
  if (j.value("version", 0) != 1) throw VersionMismatch("body model: unsupported version");
  BodyModel m;
  m.parent = j.at("parent").get<std::vector<int>>();
  m.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  m.offset_group = j.at("offset_group").get<std::vector<int>>();
  for (const auto& o : j.at("rest_offset")) {
    m.rest_offset.emplace_back(o[0].get<double>(), o[1].get<double>(), o[2].get<double>());
  }
  for (const auto& a : j.at("anchors")) {
    VertexAnchor v;
    v.skin_joint = a[0].get<int>();
    v.child_joint = a[1].get<int>();
    v.t = a[2].get<double>();
    v.rvec = Vec3(a[3].get<double>(), a[4].get<double>(), a[5].get<double>());
    v.radius = a[6].get<double>();
    v.blend_joint = a[7].get<int>();
    v.blend_w = a[8].get<double>();
    m.anchors.push_back(v);
  }
  for (const auto& t : j.at("triangles")) {
    m.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
  }
  m.vertex_part = j.at("vertex_part").get<std::vector<int>>();
  m.validate();
  return m;
}

}  // namespace hoi
