#include "hoikit/models.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <limits>

namespace hoikit {

std::string to_string(Entity e) {
  switch (e) {
    case Entity::LeftHand: return "left-hand";
    case Entity::RightHand: return "right-hand";
    case Entity::Object: return "object";
    case Entity::ObjectBase: return "object-base";
    case Entity::ObjectTop: return "object-top";
  }
  return "unknown";
}

Entity entity_from_string(const std::string& s) {
  if (s == "left-hand") return Entity::LeftHand;
  if (s == "right-hand") return Entity::RightHand;
  if (s == "object") return Entity::Object;
  if (s == "object-base") return Entity::ObjectBase;
  if (s == "object-top") return Entity::ObjectTop;
  throw DataError("unknown entity tag: " + s);
}

// ---------------------------------------------------------------------------
// Rotations
// ---------------------------------------------------------------------------

Mat3 rotation_from_axis_angle(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-14) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
}

Vec3 axis_angle_from_rotation(const Mat3& rotation) {
  Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  // atan2 of (|sin|, cos) keeps full precision near 0 and pi, where the
  // plain acos-of-trace form loses half the significant digits.
  const Mat3 rel = a.transpose() * b;
  const double cos_term = (rel.trace() - 1.0) / 2.0;
  const Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                  rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * skew.norm(), cos_term);
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

void Mesh::validate() const {
  if (vertices.rows() < 1) throw DataError("mesh has no vertices");
  if (!vertices.allFinite()) throw DataError("mesh has non-finite vertices");
  for (int f = 0; f < faces.rows(); ++f) {
    for (int c = 0; c < 3; ++c) {
      const int idx = faces(f, c);
      if (idx < 0 || idx >= vertices.rows())
        throw DataError("face index out of range: " + std::to_string(idx));
    }
  }
}

// ---------------------------------------------------------------------------
// Hand model
// ---------------------------------------------------------------------------

void HandModel::validate() const {
  tmpl.validate();
  const int v = vertex_count();
  if (shape_blendshapes.rows() != 3 * v ||
      shape_blendshapes.cols() != kHandShapeDof)
    throw DataError("blendshape matrix must be (3V) x 10");
  if (skinning_weights.rows() != v || skinning_weights.cols() != kHandJoints)
    throw DataError("skinning weights must be V x 16");
  if (joint_regressor.rows() != kHandLandmarks || joint_regressor.cols() != v)
    throw DataError("joint regressor must be 21 x V");
  if (static_cast<int>(parents.size()) != kHandJoints || parents[0] != -1)
    throw DataError("kinematic tree must have 16 joints with root parent -1");
  if (rest_offsets.rows() != kHandJoints)
    throw DataError("rest offsets must be 16 x 3");

  for (int k = 1; k < kHandJoints; ++k) {
    // parents must point strictly upward; this rules out cycles and extra roots
    if (parents[k] < 0 || parents[k] >= k)
      throw DataError("kinematic tree parent indices must satisfy p(k) < k");
  }
  for (int i = 0; i < v; ++i) {
    if (skinning_weights.row(i).minCoeff() < -1e-9)
      throw DataError("negative skinning weight at vertex " + std::to_string(i));
    if (std::abs(skinning_weights.row(i).sum() - 1.0) > 1e-6)
      throw DataError("skinning weight row " + std::to_string(i) +
                      " does not sum to 1");
  }
  for (int j = 0; j < kHandLandmarks; ++j) {
    if (std::abs(joint_regressor.row(j).sum() - 1.0) > 1e-6)
      throw DataError("joint regressor row " + std::to_string(j) +
                      " does not sum to 1");
  }
}

Points HandModel::rest_joint_positions() const {
  Points joints(kHandJoints, 3);
  joints.row(0) = rest_offsets.row(0);
  for (int k = 1; k < kHandJoints; ++k)
    joints.row(k) = joints.row(parents[k]) + rest_offsets.row(k);
  return joints;
}

HandParams HandParams::rest() {
  HandParams p;
  p.theta = VecX::Zero(kHandPoseDof);
  p.beta = VecX::Zero(kHandShapeDof);
  p.translation.setZero();
  return p;
}

void HandParams::validate() const {
  if (theta.size() != kHandPoseDof)
    throw ParameterError("theta must have 48 entries");
  if (beta.size() != kHandShapeDof)
    throw ParameterError("beta must have 10 entries");
  if (!theta.allFinite() || !beta.allFinite() || !translation.allFinite())
    throw ParameterError("hand parameters must be finite");
}

Points shaped_vertices(const HandModel& model, const VecX& beta) {
  if (beta.size() != kHandShapeDof)
    throw ParameterError("beta must have 10 entries");
  const int v = model.vertex_count();
  VecX displacement = model.shape_blendshapes * beta;  // (3V)
  Points shaped = model.tmpl.vertices;
  shaped += Eigen::Map<const Points>(displacement.data(), v, 3);
  return shaped;
}

HandSkinning hand_skinning(const HandModel& model, const HandParams& params) {
  params.validate();
  const Points rest_joints = model.rest_joint_positions();

  HandSkinning out;
  out.global_rotation = rotation_from_axis_angle(params.theta.head<3>());
  out.translation = params.translation;
  out.joint_transforms.resize(kHandJoints);

  // Local chain with the root rotation held at identity; the global segment
  // is applied afterwards about the canonical origin.
  std::vector<Eigen::Affine3d> world(kHandJoints);
  world[0] = Eigen::Translation3d(Vec3(rest_joints.row(0).transpose()));
  for (int k = 1; k < kHandJoints; ++k) {
    Eigen::Affine3d local = Eigen::Translation3d(Vec3(model.rest_offsets.row(k).transpose())) *
                            rotation_from_axis_angle(params.theta.segment<3>(3 * k));
    world[k] = world[model.parents[k]] * local;
  }
  for (int k = 0; k < kHandJoints; ++k) {
    // subtract the rest transform so an identity pose skins to the template
    out.joint_transforms[k] =
        world[k] * Eigen::Translation3d(-Vec3(rest_joints.row(k).transpose()));
  }
  return out;
}

namespace {

Vec3 skin_vertex(const HandModel& model, const HandSkinning& skin,
                 const Points& shaped, int i) {
  Vec3 blended = Vec3::Zero();
  const Vec3 v = shaped.row(i).transpose();
  for (int k = 0; k < kHandJoints; ++k) {
    const double w = model.skinning_weights(i, k);
    if (w != 0.0) blended += w * (skin.joint_transforms[k] * v);
  }
  return skin.global_rotation * blended + skin.translation;
}

}  // namespace

Mesh pose_hand(const HandModel& model, const HandParams& params) {
  const HandSkinning skin = hand_skinning(model, params);
  const Points shaped = shaped_vertices(model, params.beta);

  Mesh posed;
  posed.faces = model.tmpl.faces;
  posed.vertices.resize(model.vertex_count(), 3);
  for (int i = 0; i < model.vertex_count(); ++i)
    posed.vertices.row(i) = skin_vertex(model, skin, shaped, i).transpose();
  return posed;
}

Points pose_hand_subset(const HandModel& model, const HandParams& params,
                        const std::vector<int>& vertex_indices) {
  const HandSkinning skin = hand_skinning(model, params);
  const Points shaped = shaped_vertices(model, params.beta);

  Points out(static_cast<int>(vertex_indices.size()), 3);
  for (size_t n = 0; n < vertex_indices.size(); ++n) {
    const int i = vertex_indices[n];
    if (i < 0 || i >= model.vertex_count())
      throw ParameterError("vertex index out of range");
    out.row(static_cast<int>(n)) =
        skin_vertex(model, skin, shaped, i).transpose();
  }
  return out;
}

Points regress_joints(const HandModel& model, const Points& posed_vertices) {
  if (posed_vertices.rows() != model.vertex_count())
    throw ParameterError("posed vertex count does not match the model");
  return model.joint_regressor * posed_vertices;
}

Points regress_joints(const HandModel& model, const Mesh& posed) {
  return regress_joints(model, posed.vertices);
}

// ---------------------------------------------------------------------------
// Articulated object
// ---------------------------------------------------------------------------

void ArticulatedObject::validate() const {
  base_part.validate();
  top_part.validate();
  if (std::abs(axis_direction.norm() - 1.0) > 1e-9)
    throw DataError("axis direction must be unit length");
  if (!axis_origin.allFinite() || !std::isfinite(rest_angle))
    throw DataError("hinge definition must be finite");
  for (const auto& lm : landmarks) {
    const Mesh& part =
        lm.part == Entity::ObjectTop ? top_part : base_part;
    if (lm.part != Entity::ObjectBase && lm.part != Entity::ObjectTop)
      throw DataError("landmark part must be object-base or object-top");
    if (lm.vertex < 0 || lm.vertex >= part.vertex_count())
      throw DataError("landmark vertex index out of range");
  }
}

void ObjectPose::validate() const {
  if (!std::isfinite(omega) || !rotation.allFinite() ||
      !translation.allFinite())
    throw ParameterError("object pose must be finite");
}

std::pair<Mesh, Mesh> pose_object(const ArticulatedObject& obj,
                                  const ObjectPose& pose) {
  pose.validate();
  const Mat3 hinge =
      rotation_from_axis_angle(obj.axis_direction * (pose.omega - obj.rest_angle));
  const Mat3 rigid = rotation_from_axis_angle(pose.rotation);

  Mesh base;
  base.faces = obj.base_part.faces;
  base.vertices = (obj.base_part.vertices * rigid.transpose()).rowwise() +
                  pose.translation.transpose();

  Mesh top;
  top.faces = obj.top_part.faces;
  Points articulated =
      ((obj.top_part.vertices.rowwise() - obj.axis_origin.transpose()) *
       hinge.transpose())
          .rowwise() +
      obj.axis_origin.transpose();
  top.vertices =
      (articulated * rigid.transpose()).rowwise() + pose.translation.transpose();
  return {std::move(base), std::move(top)};
}

Points object_vertices(const Mesh& base, const Mesh& top) {
  Points all(base.vertices.rows() + top.vertices.rows(), 3);
  all.topRows(base.vertices.rows()) = base.vertices;
  all.bottomRows(top.vertices.rows()) = top.vertices;
  return all;
}

Points pose_object_landmarks(const ArticulatedObject& obj,
                             const ObjectPose& pose) {
  auto [base, top] = pose_object(obj, pose);
  Points out(static_cast<int>(obj.landmarks.size()), 3);
  for (size_t n = 0; n < obj.landmarks.size(); ++n) {
    const auto& lm = obj.landmarks[n];
    const Mesh& part = lm.part == Entity::ObjectTop ? top : base;
    out.row(static_cast<int>(n)) = part.vertices.row(lm.vertex);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

void CameraParams::validate() const {
  if (!(scale > 0.0)) throw DegenerateInputError("camera scale must be > 0");
  if (!(focal > 0.0) || !(patch_width > 0.0))
    throw ParameterError("focal length and patch width must be > 0");
  if (!std::isfinite(t_x) || !std::isfinite(t_y))
    throw ParameterError("camera translation must be finite");
}

Vec3 weak_to_perspective(const CameraParams& cam) {
  cam.validate();
  return {cam.t_x, cam.t_y, 2.0 * cam.focal / (cam.patch_width * cam.scale)};
}

Pixels project(const Points& points, const CameraParams& cam) {
  const Vec3 t = weak_to_perspective(cam);
  const double c = cam.patch_width / 2.0;
  Pixels out(points.rows(), 2);
  for (int i = 0; i < points.rows(); ++i) {
    const Vec3 q = points.row(i).transpose() + t;
    if (!(q.z() > 0.0))
      throw DegenerateInputError("point " + std::to_string(i) +
                                 " is behind the camera");
    out(i, 0) = cam.focal * q.x() / q.z() + c;
    out(i, 1) = cam.focal * q.y() / q.z() + c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Farthest point sampling
// ---------------------------------------------------------------------------

std::vector<int> fps_landmarks(const Points& vertices, int k, int start) {
  const int n = static_cast<int>(vertices.rows());
  if (k < 1 || k > n)
    throw ParameterError("fps: k must be in [1, vertex count]");
  if (start < 0 || start >= n)
    throw ParameterError("fps: start index out of range");

  std::vector<int> picked;
  picked.reserve(k);
  picked.push_back(start);

  VecX min_sq = (vertices.rowwise() - vertices.row(start))
                    .rowwise()
                    .squaredNorm();
  for (int round = 1; round < k; ++round) {
    int best = 0;
    double best_sq = -1.0;
    for (int i = 0; i < n; ++i) {
      if (min_sq[i] > best_sq) {  // strict: ties keep the lowest index
        best_sq = min_sq[i];
        best = i;
      }
    }
    picked.push_back(best);
    min_sq = min_sq.cwiseMin(
        (vertices.rowwise() - vertices.row(best)).rowwise().squaredNorm());
  }
  return picked;
}

std::vector<int> fps_landmarks(const Mesh& mesh, int k, int start) {
  return fps_landmarks(mesh.vertices, k, start);
}

}  // namespace hoikit
