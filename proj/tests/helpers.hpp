#pragma once

// Shared utilities for the unit test suites: deterministic generators and
// small oracles reimplemented independently of the library internals.

#include <cmath>
#include <random>
#include <vector>

#include "hoikit/capture.hpp"
#include "hoikit/models.hpp"
#include "hoikit/synth.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline hoikit::Points random_points(Rng& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  hoikit::Points out(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out(i, c) = u(rng);
  return out;
}

inline hoikit::Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  hoikit::Vec3 v;
  do {
    v = {g(rng), g(rng), g(rng)};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

/// Random rotation vector with angle in (0, pi).
inline hoikit::Vec3 random_rotvec(Rng& rng, double max_angle = 3.0) {
  std::uniform_real_distribution<double> a(0.1, max_angle);
  return random_unit(rng) * a(rng);
}

inline hoikit::Mat3 random_rotation(Rng& rng) {
  return hoikit::rotation_from_axis_angle(random_rotvec(rng));
}

/// Hand assets are deterministic; build them once per test binary.
inline const hoikit::HandModel& left_hand() {
  static const hoikit::HandModel model = hoikit::generate_hand_asset(true);
  return model;
}

inline const hoikit::HandModel& right_hand() {
  static const hoikit::HandModel model = hoikit::generate_hand_asset(false);
  return model;
}

inline const hoikit::ArticulatedObject& box_object() {
  static const hoikit::ArticulatedObject obj =
      hoikit::generate_object_asset(hoikit::ObjectKind::BoxHinge, 4);
  return obj;
}

inline hoikit::CaptureAssets test_assets() {
  return {left_hand(), right_hand(), box_object()};
}

inline hoikit::HandParams random_hand_params(Rng& rng, double rot = 0.4,
                                             double curl = 0.5,
                                             double trans = 0.1) {
  std::uniform_real_distribution<double> ur(-rot, rot);
  std::uniform_real_distribution<double> uc(-curl, curl);
  std::uniform_real_distribution<double> ut(-trans, trans);
  hoikit::HandParams p = hoikit::HandParams::rest();
  for (int j = 0; j < 3; ++j) p.theta[j] = ur(rng);
  for (int j = 3; j < hoikit::kHandPoseDof; ++j) p.theta[j] = 0.4 * uc(rng);
  for (int c = 0; c < 3; ++c) p.translation[c] = ut(rng);
  return p;
}

inline hoikit::ObjectPose random_object_pose(Rng& rng, double omega_max = 1.2) {
  std::uniform_real_distribution<double> uo(0.0, omega_max);
  std::uniform_real_distribution<double> ut(-0.2, 0.2);
  hoikit::ObjectPose pose;
  pose.omega = uo(rng);
  pose.rotation = random_rotvec(rng, 1.5);
  pose.translation = {ut(rng), ut(rng), ut(rng)};
  return pose;
}

/// Marker frame synthesized exactly from the given poses over the
/// correspondences (no noise, no dropout).
inline hoikit::MarkerFrame exact_frame(
    const hoikit::CaptureAssets& assets,
    const std::vector<hoikit::MarkerCorrespondence>& corr,
    const hoikit::HandParams& left, const hoikit::HandParams& right,
    const hoikit::ObjectPose& object, double time = 0.0) {
  hoikit::MarkerFrame frame;
  frame.time = time;
  const auto [base, top] = hoikit::pose_object(assets.object, object);
  const hoikit::Mesh left_mesh = hoikit::pose_hand(assets.left, left);
  const hoikit::Mesh right_mesh = hoikit::pose_hand(assets.right, right);
  for (const auto& c : corr) {
    hoikit::Vec3 p;
    switch (c.entity) {
      case hoikit::Entity::LeftHand:
        p = left_mesh.vertices.row(c.vertex).transpose();
        break;
      case hoikit::Entity::RightHand:
        p = right_mesh.vertices.row(c.vertex).transpose();
        break;
      case hoikit::Entity::ObjectBase:
        p = base.vertices.row(c.vertex).transpose();
        break;
      default:
        p = top.vertices.row(c.vertex).transpose();
        break;
    }
    frame.positions[c.marker_id] = p;
  }
  return frame;
}

}  // namespace testutil
