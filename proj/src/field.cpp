#include "hoi/field/field.hpp"

#include <nlohmann/json.hpp>

#include "hoi/parallel.hpp"
#include "hoi/sim/objects.hpp"

namespace hoi {

using json = nlohmann::json;

FieldNoiseConfig FieldNoiseConfig::zero() {
  FieldNoiseConfig c;
  c.rot_sigma_deg_vis = c.rot_sigma_deg_occl = 0;
  c.trans_sigma_vis = c.trans_sigma_occl = 0;
  c.point_rot_jitter_deg = c.point_trans_jitter = c.point_vis_jitter = 0;
  c.vis_sigma = 0;
  c.part_flip_prob = 0;
  c.cond_off_scene_depth_sigma = c.cond_off_scene_lateral_sigma = 0;
  return c;
}

std::string FieldNoiseConfig::to_json() const {
  json j;
  j["rot_sigma_deg_vis"] = rot_sigma_deg_vis;
  j["rot_sigma_deg_occl"] = rot_sigma_deg_occl;
  j["trans_sigma_vis"] = trans_sigma_vis;
  j["trans_sigma_occl"] = trans_sigma_occl;
  j["point_rot_jitter_deg"] = point_rot_jitter_deg;
  j["point_trans_jitter"] = point_trans_jitter;
  j["point_vis_jitter"] = point_vis_jitter;
  j["vis_sigma"] = vis_sigma;
  j["part_flip_prob"] = part_flip_prob;
  j["part_boundary_band"] = part_boundary_band;
  j["part_temperature"] = part_temperature;
  j["cond_off_trans_scale"] = cond_off_trans_scale;
  j["cond_off_scene_depth_sigma"] = cond_off_scene_depth_sigma;
  j["cond_off_scene_lateral_sigma"] = cond_off_scene_lateral_sigma;
  j["seed"] = seed;
  return j.dump(1);
}

FieldNoiseConfig FieldNoiseConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw CorruptFile("field noise config: invalid JSON");
  FieldNoiseConfig c;
  c.rot_sigma_deg_vis = j.value("rot_sigma_deg_vis", c.rot_sigma_deg_vis);
  c.rot_sigma_deg_occl = j.value("rot_sigma_deg_occl", c.rot_sigma_deg_occl);
  c.trans_sigma_vis = j.value("trans_sigma_vis", c.trans_sigma_vis);
  c.trans_sigma_occl = j.value("trans_sigma_occl", c.trans_sigma_occl);
  c.point_rot_jitter_deg = j.value("point_rot_jitter_deg", c.point_rot_jitter_deg);
  c.point_trans_jitter = j.value("point_trans_jitter", c.point_trans_jitter);
  c.point_vis_jitter = j.value("point_vis_jitter", c.point_vis_jitter);
  c.vis_sigma = j.value("vis_sigma", c.vis_sigma);
  c.part_flip_prob = j.value("part_flip_prob", c.part_flip_prob);
  c.part_boundary_band = j.value("part_boundary_band", c.part_boundary_band);
  c.part_temperature = j.value("part_temperature", c.part_temperature);
  c.cond_off_trans_scale = j.value("cond_off_trans_scale", c.cond_off_trans_scale);
  c.cond_off_scene_depth_sigma = j.value("cond_off_scene_depth_sigma", c.cond_off_scene_depth_sigma);
  c.cond_off_scene_lateral_sigma =
      j.value("cond_off_scene_lateral_sigma", c.cond_off_scene_lateral_sigma);
  c.seed = j.value("seed", c.seed);
  return c;
}

OracleField::OracleField(const BodyModel& model, const BodyState& gt_body,
                         const TriMesh& object_tmpl, const ObjectPose& gt_object, double gt_vis,
                         const Camera& cam, const FieldNoiseConfig& cfg, bool conditioning,
                         int frame_index)
    : cam_(cam), cfg_(cfg), conditioning_(conditioning), gt_vis_(gt_vis) {
  frame_seed_ = hash_combine(hash_combine(cfg.seed, 0x6669656c64ull),
                             static_cast<uint64_t>(frame_index) * 2 + (conditioning ? 1 : 0));
  Rng rng(frame_seed_);

  const double occ = 1.0 - gt_vis;
  const double rot_sigma =
      deg2rad(cfg.rot_sigma_deg_vis + (cfg.rot_sigma_deg_occl - cfg.rot_sigma_deg_vis) * occ);
  double trans_sigma = cfg.trans_sigma_vis + (cfg.trans_sigma_occl - cfg.trans_sigma_vis) * occ;
  if (!conditioning) trans_sigma *= cfg.cond_off_trans_scale;

  Vec3 scene_shift = Vec3::Zero();
  if (!conditioning) {
    scene_shift = Vec3(rng.gaussian(0, cfg.cond_off_scene_lateral_sigma),
                       rng.gaussian(0, cfg.cond_off_scene_lateral_sigma),
                       rng.gaussian(0, cfg.cond_off_scene_depth_sigma));
  }

  believed_pose_.rot = Rotation::exp(rng.unit_vector() * rng.gaussian(0, rot_sigma)) * gt_object.rot;
  believed_pose_.trans = gt_object.trans + rng.gaussian3(trans_sigma) + scene_shift;
  believed_vis_ = std::clamp(gt_vis + rng.gaussian(0, cfg.vis_sigma), 0.0, 1.0);

  believed_body_ = model.forward(gt_body).mesh;
  believed_body_.translate_in_place(scene_shift);
  believed_object_ = object_tmpl.transformed(believed_pose_.rot, believed_pose_.trans);

  body_bvh_ = std::make_unique<TriBvh>(believed_body_);
  object_bvh_ = std::make_unique<TriBvh>(believed_object_);
  body_vertex_tree_ = std::make_unique<KdTree>(believed_body_.vertices);
}

namespace {

struct PartQuery {
  VecX probs;
  int label = 0;
  bool flipped = false;
  // Per part (1-based index - 1): nearest distance and vertex, -1 if absent.
  std::array<double, BodyModel::kParts> dist;
  std::array<int, BodyModel::kParts> vertex;
};

}  // namespace

struct OracleField::PartQueryImpl {
  static PartQuery run(const OracleField& f, const Vec3& p) {
    PartQuery q;
    q.dist.fill(-1.0);
    q.vertex.fill(-1);
    const auto knn = f.body_vertex_tree_->knn(p, 6);
    for (const auto& h : knn) {
      const int part = f.believed_body_.part_labels[h.index] - 1;
      if (q.dist[part] < 0 || h.dist < q.dist[part]) {
        q.dist[part] = h.dist;
        q.vertex[part] = h.index;
      }
    }
    q.probs = VecX::Zero(BodyModel::kParts);
    double norm = 0;
    for (int k = 0; k < BodyModel::kParts; ++k) {
      if (q.dist[k] >= 0) {
        q.probs[k] = std::exp(-q.dist[k] / f.cfg_.part_temperature);
        norm += q.probs[k];
      }
    }
    q.probs /= norm;

    // Label flips near part boundaries, deterministic per (point, frame).
    int best, second = -1;
    q.probs.maxCoeff(&best);
    double second_val = -1;
    for (int k = 0; k < BodyModel::kParts; ++k) {
      if (k != best && q.probs[k] > second_val) {
        second_val = q.probs[k];
        second = k;
      }
    }
    if (second >= 0 && second_val > 0 && f.cfg_.part_flip_prob > 0) {
      if (q.dist[second] >= 0 && q.dist[second] - q.dist[best] < f.cfg_.part_boundary_band) {
        const double u =
            hash_to_unit(hash_point(p, hash_combine(f.frame_seed_, 0x70617274ull)));
        if (u < f.cfg_.part_flip_prob) {
          std::swap(q.probs[best], q.probs[second]);
          q.flipped = true;
        }
      }
    }
    q.probs.maxCoeff(&q.label);
    ++q.label;  // parts are 1-based
    return q;
  }
};

VecX OracleField::part_probs(const Vec3& p, int& label) const {
  const PartQuery q = PartQueryImpl::run(*this, p);
  label = q.label;
  return q.probs;
}

double OracleField::part_cross_entropy(const Vec3& p, int target_label, Vec3* grad_p,
                                       int& pred_label) const {
  if (target_label < 1 || target_label > BodyModel::kParts) {
    throw UnknownPart("part_cross_entropy: target label out of range");
  }
  const PartQuery q = PartQueryImpl::run(*this, p);
  pred_label = q.label;
  const int t = target_label - 1;
  const double prob = std::max(q.probs[t], 1e-12);
  const double ce = -std::log(prob);
  if (grad_p) {
    *grad_p = Vec3::Zero();
    if (!q.flipped && q.dist[t] >= 0) {
      // d(-log p_t)/dp = (1/tau) * (sum_j p_j u_j - u_t), u_j unit from the
      // part's nearest vertex toward p.
      Vec3 acc = Vec3::Zero();
      for (int k = 0; k < BodyModel::kParts; ++k) {
        if (q.dist[k] <= 1e-12 || q.vertex[k] < 0) continue;
        const Vec3 u = (p - believed_body_.vertices[q.vertex[k]]) / q.dist[k];
        acc += q.probs[k] * u;
      }
      if (q.dist[t] > 1e-12) {
        const Vec3 u_t = (p - believed_body_.vertices[q.vertex[t]]) / q.dist[t];
        *grad_p = (acc - u_t) / cfg_.part_temperature;
      } else {
        *grad_p = acc / cfg_.part_temperature;
      }
    }
  }
  return ce;
}

FieldSample OracleField::query(const Vec3& p) const {
  FieldSample s;
  s.d_h = human_udf(p).dist;
  s.d_o = object_udf(p).dist;
  s.part_probs = part_probs(p, s.part);

  const uint64_t ph = hash_point(p, frame_seed_);
  if (cfg_.point_rot_jitter_deg > 0) {
    Vec3 axis(hash_to_gaussian(hash_combine(ph, 1)), hash_to_gaussian(hash_combine(ph, 2)),
              hash_to_gaussian(hash_combine(ph, 3)));
    if (axis.norm() < 1e-12) axis = Vec3(1, 0, 0);
    const double ang = hash_to_gaussian(hash_combine(ph, 4)) * deg2rad(cfg_.point_rot_jitter_deg);
    s.rot = Rotation::exp(axis.normalized() * ang) * believed_pose_.rot;
  } else {
    s.rot = believed_pose_.rot;
  }
  s.trans = believed_pose_.trans +
            Vec3(hash_to_gaussian(hash_combine(ph, 5)), hash_to_gaussian(hash_combine(ph, 6)),
                 hash_to_gaussian(hash_combine(ph, 7))) *
                cfg_.point_trans_jitter;
  s.vis = std::clamp(
      believed_vis_ + hash_to_gaussian(hash_combine(ph, 8)) * cfg_.point_vis_jitter, 0.0, 1.0);
  return s;
}

std::vector<FieldPtr> build_fields(const Sequence& seq, const BodyModel& model,
                                   const FieldNoiseConfig& cfg, bool conditioning) {
  const TriMesh tmpl = object_template(seq.template_id);
  std::vector<FieldPtr> fields(seq.frames());
  FieldNoiseConfig frame_cfg = cfg;
  frame_cfg.seed = hash_combine(cfg.seed, seq.seed);
  parallel_for(seq.frames(), [&](std::ptrdiff_t i) {
    fields[i] = std::make_shared<OracleField>(model, seq.gt_body[i], tmpl, seq.gt_object[i],
                                              seq.gt_vis[i], seq.camera, frame_cfg, conditioning,
                                              static_cast<int>(i));
  });
  return fields;
}

}  // namespace hoi
