#pragma once

#include <string>
#include <vector>

#include "hoi/geom/camera.hpp"
#include "hoi/geom/mesh.hpp"

namespace hoi {

// Pose (per-joint 6D rotations + global translation) and shape (10
// bone-scale coefficients) of the proxy body.
struct BodyState {
  VecX pose6d;              // 24 * 6
  Vec3 translation = Vec3::Zero();
  VecX beta;                // 10

  BodyState();
  // theta packs pose6d followed by translation (147 values).
  VecX to_theta() const;
  void set_theta(const VecX& theta);
  void validate() const;    // rotations decodable, beta in [-3, 3]
};

// Capsule-skinned kinematic proxy standing in for a parametric body model:
// 24 joints, 14 part labels, linear blend skinning with at most 2 joints per
// vertex. Immutable after construction; FK calls are pure.
class BodyModel {
 public:
  static constexpr int kJoints = 24;
  static constexpr int kParts = 14;
  static constexpr int kBetaDim = 10;
  static constexpr int kThetaDim = kJoints * 6 + 3;  // 147

  // Surface vertex anchored to one skeleton segment. Rest position:
  //   v = rest_joint[skin_joint] + t * (scaled offset of child_joint)
  //       + radius * exp(kRadiusGain * beta[9]) * rvec
  struct VertexAnchor {
    int skin_joint = 0;   // primary LBS joint (top of the segment)
    int child_joint = 0;  // segment end; supplies the axial direction
    double t = 0;
    Vec3 rvec = Vec3::Zero();
    double radius = 0;
    int blend_joint = -1;  // optional second LBS joint
    double blend_w = 0;
  };

  struct RestGeometry {
    std::vector<double> scale;  // per-joint offset scale factor
    double radius_factor = 1;
    std::vector<Vec3> joints;
    std::vector<Vec3> vertices;
  };

  struct FkResult {
    std::vector<Vec3> joints;
    TriMesh mesh;
    // Vertex indices realized in mesh.vertices; empty means all (and then
    // mesh also carries triangles and part labels).
    std::vector<int> subset;
    // Cached intermediates for the adjoint pass.
    std::vector<Mat3> r_local, r_global;
    RestGeometry rest;
  };

  static BodyModel make_default();
  static BodyModel from_json(const std::string& text);
  std::string to_json() const;

  int vertex_count() const { return static_cast<int>(anchors.size()); }

  RestGeometry rest_geometry(const VecX& beta) const;
  // With a non-empty subset only those surface vertices are skinned
  // (mesh.vertices[k] corresponds to subset[k]).
  FkResult forward(const BodyState& state, const std::vector<int>& subset = {}) const;

  // Adjoint of forward(): accumulates d(loss)/d(theta) (147) and
  // d(loss)/d(beta) (10) from gradients on joints and surface vertices.
  // Either gradient list may be empty; grad_vertices aligns with fk.subset
  // when a subset was used.
  void backward(const BodyState& state, const FkResult& fk,
                const std::vector<Vec3>& grad_joints,
                const std::vector<Vec3>& grad_vertices,
                VecX& grad_theta, VecX& grad_beta) const;

  // Perspective projection of posed joints; throws BehindCamera listing
  // offending joints when any z <= 0.05 m.
  std::vector<Vec2> project_joints(const BodyState& state, const Camera& cam) const;

  // Vertex indices of one part (1..K); the part sets partition all vertices.
  std::vector<int> part_vertices(int part_id) const;

  void validate() const;

  std::vector<int> parent;
  std::vector<Vec3> rest_offset;
  std::vector<std::string> joint_names;
  std::vector<int> offset_group;     // beta component (1..8) scaling the offset
  std::vector<VertexAnchor> anchors;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> vertex_part;      // 1..K

  static constexpr double kGlobalGain = 0.05;
  static constexpr double kGroupGain = 0.08;
  static constexpr double kRadiusGain = 0.06;
};

}  // namespace hoi
