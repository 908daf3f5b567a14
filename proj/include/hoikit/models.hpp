#pragma once

#include <Eigen/Geometry>
#include <utility>
#include <vector>

#include "hoikit/types.hpp"

namespace hoikit {

// ---------------------------------------------------------------------------
// Rotations (axis-angle vectors, Rodrigues form)
// ---------------------------------------------------------------------------

/// Axis-angle vector (angle = norm, radians) to rotation matrix.
Mat3 rotation_from_axis_angle(const Vec3& rotvec);

/// Rotation matrix to axis-angle vector with angle in [0, pi].
Vec3 axis_angle_from_rotation(const Mat3& rotation);

/// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

struct Mesh {
  Points vertices;   // V x 3, meters
  Triangles faces;   // F x 3 vertex indices

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }

  /// Throws DataError on empty/non-finite vertices or out-of-range faces.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Parametric hand
// ---------------------------------------------------------------------------

inline constexpr int kHandJoints = 16;      // skeleton joints, root first
inline constexpr int kHandLandmarks = 21;   // 16 joints + 5 fingertips
inline constexpr int kHandPoseDof = 3 * kHandJoints;  // 48
inline constexpr int kHandShapeDof = 10;

/// Skinned parametric hand: shape blendshapes + forward kinematics + linear
/// blend skinning. Immutable after load; all operations on it are pure.
struct HandModel {
  Mesh tmpl;                  // canonical-pose template, V x 3
  MatX shape_blendshapes;     // (3V) x 10, vertex-major [x0 y0 z0 x1 ...]
  MatX skinning_weights;      // V x 16, rows sum to 1
  std::vector<int> parents;   // 16 entries, parents[0] == -1
  MatX joint_regressor;       // 21 x V, rows sum to 1
  Points rest_offsets;        // 16 x 3; root absolute, others parent-relative

  int vertex_count() const { return tmpl.vertex_count(); }

  /// Absolute canonical-pose joint positions accumulated down the tree.
  Points rest_joint_positions() const;

  /// Throws DataError if any invariant fails (weight/regressor row sums,
  /// tree rooted and acyclic, dimensions consistent).
  void validate() const;
};

struct HandParams {
  VecX theta;        // 48, axis-angle per joint; first 3 = global rotation
  VecX beta;         // 10 shape coefficients
  Vec3 translation;  // meters

  static HandParams rest();
  void validate() const;  // dimensions and finiteness
};

/// Maps (theta, beta, translation) to a posed mesh.
///
/// The global-rotation segment theta[0..2] rotates the whole hand about the
/// canonical-frame origin; the translation is added last, so an identity
/// local pose gives vertices R_glob * v + T.
Mesh pose_hand(const HandModel& model, const HandParams& params);

/// Per-joint skinning transforms for the local chain plus the global
/// rotation, as computed by pose_hand. Exposed so solvers can pose vertex
/// subsets without skinning the full mesh.
struct HandSkinning {
  Mat3 global_rotation;
  std::vector<Eigen::Affine3d> joint_transforms;  // 16 entries
  Vec3 translation;
};
HandSkinning hand_skinning(const HandModel& model, const HandParams& params);

/// Shaped canonical vertices (template + beta blendshapes), no pose.
Points shaped_vertices(const HandModel& model, const VecX& beta);

/// Pose only the given vertex indices. Matches pose_hand rows exactly.
Points pose_hand_subset(const HandModel& model, const HandParams& params,
                        const std::vector<int>& vertex_indices);

/// 21 x 3 landmark positions, regressor applied to posed vertices.
Points regress_joints(const HandModel& model, const Mesh& posed);
Points regress_joints(const HandModel& model, const Points& posed_vertices);

// ---------------------------------------------------------------------------
// Articulated object (two rigid parts, one revolute joint)
// ---------------------------------------------------------------------------

struct ObjectLandmark {
  Entity part = Entity::ObjectBase;  // ObjectBase or ObjectTop
  int vertex = 0;
};

struct ArticulatedObject {
  Mesh base_part;
  Mesh top_part;
  Vec3 axis_origin;    // point on the hinge, canonical frame, meters
  Vec3 axis_direction; // unit
  double rest_angle = 0.0;  // articulation of the canonical pose, radians
  std::vector<ObjectLandmark> landmarks;
  int fps_start = 0;   // seed vertex index used when sampling landmarks

  void validate() const;
};

struct ObjectPose {
  double omega = 0.0;  // absolute articulation angle, radians
  Vec3 rotation = Vec3::Zero();     // axis-angle global rotation
  Vec3 translation = Vec3::Zero();  // meters

  void validate() const;
};

/// Posed (base, top) meshes. The top part is rotated by (omega - rest_angle)
/// about the hinge in the canonical frame, then both parts are transformed
/// rigidly by (rotation, translation).
std::pair<Mesh, Mesh> pose_object(const ArticulatedObject& obj,
                                  const ObjectPose& pose);

/// Base and top vertices stacked into one V x 3 array (base first).
Points object_vertices(const Mesh& base, const Mesh& top);

/// Posed positions of the object's landmarks, K x 3.
Points pose_object_landmarks(const ArticulatedObject& obj,
                             const ObjectPose& pose);

// ---------------------------------------------------------------------------
// Camera
// ---------------------------------------------------------------------------

struct CameraParams {
  double scale = 1.0;     // weak-perspective scale s, > 0
  double t_x = 0.0;       // weak-perspective translation, px
  double t_y = 0.0;
  double focal = 1000.0;  // px, > 0
  double patch_width = 224.0;  // px, > 0

  void validate() const;
};

/// Weak-perspective to perspective translation: (t_x, t_y, 2f / (w s)).
Vec3 weak_to_perspective(const CameraParams& cam);

/// Pinhole projection of model-frame points after adding
/// weak_to_perspective(cam); principal point at the patch center.
/// Throws DegenerateInputError if any depth is <= 0.
Pixels project(const Points& points, const CameraParams& cam);

// ---------------------------------------------------------------------------
// Farthest point sampling
// ---------------------------------------------------------------------------

/// Greedy max-min vertex selection. First index is `start`; each subsequent
/// index maximizes the distance to the selected set, ties broken by lowest
/// index. Deterministic.
std::vector<int> fps_landmarks(const Mesh& mesh, int k, int start);
std::vector<int> fps_landmarks(const Points& vertices, int k, int start);

}  // namespace hoikit
