#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hoikit/capture.hpp"
#include "hoikit/metrics.hpp"
#include "hoikit/models.hpp"
#include "helpers.hpp"

using namespace hoikit;
using testutil::Rng;

namespace {

Points apply_rigid(const Points& p, const Mat3& r, const Vec3& t) {
  return (p * r.transpose()).rowwise() + t.transpose();
}

/// Relative top-in-base poses for a hinge at `origin` about unit `dir`.
std::vector<RigidTransform> hinge_poses(const Vec3& origin, const Vec3& dir,
                                        const std::vector<double>& angles) {
  std::vector<RigidTransform> out;
  for (const double a : angles) {
    RigidTransform rt;
    rt.rotation = dir * a;
    const Mat3 r = rotation_from_axis_angle(rt.rotation);
    rt.translation = origin - r * origin;
    out.push_back(rt);
  }
  return out;
}

double point_line_distance(const Vec3& p, const Vec3& origin,
                           const Vec3& dir) {
  return dir.cross(p - origin).norm();
}

/// Full world-space articulation objective used as the grid oracle.
double articulation_objective(const ArticulatedObject& obj,
                              const RigidTransform& base_pose,
                              const MarkerFrame& frame,
                              const std::vector<MarkerCorrespondence>& corr,
                              double omega) {
  const Mat3 rb = rotation_from_axis_angle(base_pose.rotation);
  const Mat3 hinge =
      rotation_from_axis_angle(obj.axis_direction * (omega - obj.rest_angle));
  double total = 0.0;
  for (const auto& mc : corr) {
    if (mc.entity != Entity::ObjectTop) continue;
    const auto it = frame.positions.find(mc.marker_id);
    if (it == frame.positions.end()) continue;
    const Vec3 v = obj.top_part.vertices.row(mc.vertex).transpose();
    const Vec3 pred =
        rb * (obj.axis_origin + hinge * (v - obj.axis_origin)) +
        base_pose.translation;
    total += (pred - it->second).squaredNorm();
  }
  return total;
}

}  // namespace

TEST_SUITE("capture") {

TEST_CASE("solve_rigid on identical clouds is the identity") {
  Rng rng(31);
  const Points p = testutil::random_points(rng, 12);
  const RigidTransform rt = solve_rigid(p, p);
  CHECK(rt.rotation.norm() < 1e-12);
  CHECK(rt.translation.norm() < 1e-12);
  CHECK(rt.rms_residual < 1e-12);
}

TEST_CASE("solve_rigid recovers a known quarter turn plus offset") {
  Rng rng(32);
  const Points src = testutil::random_points(rng, 9);
  const Mat3 r = rotation_from_axis_angle(Vec3(0, 0, M_PI / 2));
  const Vec3 t(1, 2, 3);
  const RigidTransform rt = solve_rigid(src, apply_rigid(src, r, t));
  CHECK(rotation_angle_between(rotation_from_axis_angle(rt.rotation), r) <
        1e-9);
  CHECK((rt.translation - t).norm() < 1e-9);
  CHECK(rt.rms_residual < 1e-9);
}

TEST_CASE("solve_rigid residual tracks the noise level") {
  Rng rng(33);
  std::normal_distribution<double> g(0.0, 5e-4);
  int in_band = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Points src = testutil::random_points(rng, 20, 0.2);
    const Mat3 r = testutil::random_rotation(rng);
    const Vec3 t = testutil::random_unit(rng) * 0.5;
    Points tgt = apply_rigid(src, r, t);
    for (int i = 0; i < tgt.rows(); ++i)
      for (int c = 0; c < 3; ++c) tgt(i, c) += g(rng);
    const double res = solve_rigid(src, tgt).rms_residual;
    if (res >= 0.5 * 5e-4 && res <= 1.5 * 5e-4) ++in_band;
  }
  // rms per coordinate of the residual after removing 6 DOF stays near
  // sigma; allow a few outliers
  CHECK(in_band >= 95);
}

TEST_CASE("solve_rigid rejects degenerate configurations") {
  Points two(2, 3);
  two << 0, 0, 0, 1, 0, 0;
  CHECK_THROWS_AS(solve_rigid(two, two), DegenerateInputError);

  Points line(5, 3);
  line.setZero();
  for (int i = 0; i < 5; ++i) line(i, 0) = i;
  CHECK_THROWS_AS(solve_rigid(line, line), DegenerateInputError);

  Points a(4, 3), b(3, 3);
  a.setRandom();
  b.setRandom();
  CHECK_THROWS_AS(solve_rigid(a, b), ParameterError);
}

TEST_CASE("solve_rigid conjugates under a common rotation") {
  Rng rng(34);
  for (int trial = 0; trial < 25; ++trial) {
    const Points src = testutil::random_points(rng, 10);
    const Mat3 r = testutil::random_rotation(rng);
    const Vec3 t = testutil::random_unit(rng) * 0.3;
    const Points tgt = apply_rigid(src, r, t);
    const Mat3 q = testutil::random_rotation(rng);

    const RigidTransform base = solve_rigid(src, tgt);
    const RigidTransform conj =
        solve_rigid(apply_rigid(src, q, Vec3::Zero()),
                    apply_rigid(tgt, q, Vec3::Zero()));
    const Mat3 expect =
        q * rotation_from_axis_angle(base.rotation) * q.transpose();
    CHECK(rotation_angle_between(rotation_from_axis_angle(conj.rotation),
                                 expect) < 1e-9);
  }
}

TEST_CASE("solve_rigid residual ignores correspondence order") {
  Rng rng(35);
  const Points src = testutil::random_points(rng, 14);
  Points tgt = apply_rigid(src, testutil::random_rotation(rng), Vec3(0.1, -0.2, 0.3));
  std::normal_distribution<double> g(0.0, 1e-3);
  for (int i = 0; i < tgt.rows(); ++i)
    for (int c = 0; c < 3; ++c) tgt(i, c) += g(rng);

  std::vector<int> perm(14);
  for (int i = 0; i < 14; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Points src_p(14, 3), tgt_p(14, 3);
  for (int i = 0; i < 14; ++i) {
    src_p.row(i) = src.row(perm[static_cast<std::size_t>(i)]);
    tgt_p.row(i) = tgt.row(perm[static_cast<std::size_t>(i)]);
  }
  CHECK(solve_rigid(src, tgt).rms_residual ==
        doctest::Approx(solve_rigid(src_p, tgt_p).rms_residual)
            .epsilon(1e-12));
}

TEST_CASE("solve_rigid weights can mute an outlier") {
  Rng rng(36);
  const Points src = testutil::random_points(rng, 8);
  const Mat3 r = testutil::random_rotation(rng);
  const Vec3 t(0.2, 0.1, -0.3);
  Points tgt = apply_rigid(src, r, t);
  tgt.row(5) += Eigen::RowVector3d(4, 4, 4);  // corrupted marker

  VecX w = VecX::Ones(8);
  w[5] = 0.0;
  const RigidTransform rt = solve_rigid(src, tgt, w);
  CHECK(rotation_angle_between(rotation_from_axis_angle(rt.rotation), r) <
        1e-9);
  CHECK((rt.translation - t).norm() < 1e-9);
}

TEST_CASE("estimate_axis recovers a synthetic hinge exactly") {
  const Vec3 origin(1, 1, 0);
  const Vec3 dir = Vec3::UnitZ();
  std::vector<double> angles;
  for (int deg = 10; deg <= 80; deg += 10)
    angles.push_back(deg * M_PI / 180.0);
  const HingeEstimate h = estimate_axis(hinge_poses(origin, dir, angles));
  CHECK((h.axis_direction - dir).norm() < 1e-9);
  CHECK(point_line_distance(h.axis_origin, origin, dir) < 1e-9);
  CHECK(h.rms_residual < 1e-9);
  // gauge: no component along the axis
  CHECK(std::abs(h.axis_origin.dot(h.axis_direction)) < 1e-12);
}

TEST_CASE("estimate_axis sign-normalizes the direction") {
  const Vec3 origin(0.2, -0.1, 0.4);
  const Vec3 dir = -Vec3::UnitX();  // negative first component
  const HingeEstimate h =
      estimate_axis(hinge_poses(origin, dir, {0.3, 0.7, 1.1}));
  CHECK(h.axis_direction.x() > 0.0);
  CHECK((h.axis_direction - Vec3::UnitX()).norm() < 1e-9);
}

TEST_CASE("estimate_axis needs rotated poses") {
  CHECK_THROWS_AS(estimate_axis({RigidTransform{}}), DegenerateInputError);
  // all rotations within a degree of the first: unobservable
  const HingeEstimate* unused = nullptr;
  (void)unused;
  CHECK_THROWS_AS(
      estimate_axis(hinge_poses(Vec3::Zero(), Vec3::UnitZ(),
                                {0.0, 0.004, 0.008})),
      DegenerateInputError);
}

TEST_CASE("estimate_axis direction error stays small under marker noise") {
  Rng rng(37);
  std::normal_distribution<double> g(0.0, 5e-4);
  const Vec3 origin(0.05, -0.02, 0.08);
  const Vec3 dir = Vec3(1, 2, 2).normalized();
  const Points top = testutil::random_points(rng, 10, 0.15);

  std::vector<double> errors;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RigidTransform> rel;
    for (const double a : {0.2, 0.5, 0.8, 1.1, 1.4}) {
      const Mat3 r = rotation_from_axis_angle(dir * a);
      const Vec3 t = origin - r * origin;
      Points obs = apply_rigid(top, r, t);
      for (int i = 0; i < obs.rows(); ++i)
        for (int c = 0; c < 3; ++c) obs(i, c) += g(rng);
      rel.push_back(solve_rigid(top, obs));
    }
    const HingeEstimate h = estimate_axis(rel);
    errors.push_back(std::acos(std::clamp(
        std::abs(h.axis_direction.dot(dir)), 0.0, 1.0)));
  }
  std::sort(errors.begin(), errors.end());
  CHECK(errors[errors.size() / 2] < 0.5 * M_PI / 180.0);
}

TEST_CASE("solve_articulation recovers a known angle") {
  const ArticulatedObject& obj = testutil::box_object();
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);

  Rng rng(38);
  for (int trial = 0; trial < 10; ++trial) {
    ObjectPose pose = testutil::random_object_pose(rng);
    pose.omega = 0.7;
    const MarkerFrame frame =
        testutil::exact_frame(assets, corr, HandParams::rest(),
                              HandParams::rest(), pose);
    RigidTransform base;
    base.rotation = pose.rotation;
    base.translation = pose.translation;
    CHECK(std::abs(solve_articulation(obj, base, frame, corr) - 0.7) < 1e-9);
  }
}

TEST_CASE("solve_articulation at the rest pose returns the rest angle") {
  ArticulatedObject obj = testutil::box_object();
  obj.rest_angle = 0.25;
  std::vector<MarkerCorrespondence> corr;
  MarkerFrame frame;
  for (int i = 0; i < 6; ++i) {
    corr.push_back({"t" + std::to_string(i), Entity::ObjectTop, i});
    frame.positions["t" + std::to_string(i)] =
        obj.top_part.vertices.row(i).transpose();
  }
  CHECK(std::abs(solve_articulation(obj, RigidTransform{}, frame, corr) -
                 0.25) < 1e-12);
}

TEST_CASE("solve_articulation rejects markers on the hinge line") {
  ArticulatedObject obj;
  obj.base_part.vertices = Points::Zero(1, 3);
  obj.top_part.vertices = Points::Zero(2, 3);
  obj.top_part.vertices << 0, 0, 0.1, 0, 0, 0.9;  // both on the axis
  obj.axis_origin = Vec3::Zero();
  obj.axis_direction = Vec3::UnitZ();

  std::vector<MarkerCorrespondence> corr{{"a", Entity::ObjectTop, 0},
                                         {"b", Entity::ObjectTop, 1}};
  MarkerFrame frame;
  frame.positions["a"] = Vec3(0, 0, 0.1);
  frame.positions["b"] = Vec3(0, 0, 0.9);
  CHECK_THROWS_AS(solve_articulation(obj, RigidTransform{}, frame, corr),
                  DegenerateInputError);

  MarkerFrame nothing;
  CHECK_THROWS_AS(solve_articulation(obj, RigidTransform{}, nothing, corr),
                  DegenerateInputError);
}

TEST_CASE("solve_articulation beats a dense angle grid") {
  const ArticulatedObject& obj = testutil::box_object();
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);

  Rng rng(39);
  std::normal_distribution<double> g(0.0, 2e-3);
  for (int trial = 0; trial < 5; ++trial) {
    ObjectPose pose = testutil::random_object_pose(rng);
    MarkerFrame frame =
        testutil::exact_frame(assets, corr, HandParams::rest(),
                              HandParams::rest(), pose);
    for (auto& kv : frame.positions)
      kv.second += Vec3(g(rng), g(rng), g(rng));  // noise moves the optimum

    RigidTransform base;
    base.rotation = pose.rotation;
    base.translation = pose.translation;
    const double omega = solve_articulation(obj, base, frame, corr);
    const double at_solution =
        articulation_objective(obj, base, frame, corr, omega);
    for (int k = 0; k < 256; ++k) {
      const double sample = -M_PI + 2.0 * M_PI * (k + 1) / 256.0;
      CHECK(at_solution <=
            articulation_objective(obj, base, frame, corr, sample) + 1e-12);
    }
  }
}

TEST_CASE("fit_hand at an exact init accepts no steps") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  Rng rng(40);
  const HandParams truth = testutil::random_hand_params(rng);
  const MarkerFrame frame = testutil::exact_frame(
      assets, corr, truth, HandParams::rest(), ObjectPose{});

  const HandFitResult fit = fit_hand(assets.left, frame, corr,
                                     Entity::LeftHand, truth, SolverSettings{});
  CHECK(fit.rms_residual < 1e-12);
  CHECK(fit.accepted_steps == 0);
  CHECK(fit.converged);
}

TEST_CASE("fit_hand requires four visible markers") {
  const CaptureAssets assets = testutil::test_assets();
  std::vector<MarkerCorrespondence> corr{{"a", Entity::LeftHand, 0},
                                         {"b", Entity::LeftHand, 3},
                                         {"c", Entity::LeftHand, 9}};
  MarkerFrame frame;
  for (const auto& c : corr)
    frame.positions[c.marker_id] =
        assets.left.tmpl.vertices.row(c.vertex).transpose();
  CHECK_THROWS_AS(fit_hand(assets.left, frame, corr, Entity::LeftHand,
                           HandParams::rest(), SolverSettings{}),
                  DegenerateInputError);
  CHECK_THROWS_AS(fit_hand(assets.left, frame, corr, Entity::Object,
                           HandParams::rest(), SolverSettings{}),
                  ParameterError);
}

TEST_CASE("fit_hand recovers pose from a perturbed init") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  Rng rng(41);
  std::uniform_real_distribution<double> u(-0.1, 0.1);

  for (int trial = 0; trial < 10; ++trial) {
    const HandParams truth = testutil::random_hand_params(rng);
    const MarkerFrame frame = testutil::exact_frame(
        assets, corr, HandParams::rest(), truth, ObjectPose{});
    HandParams init = truth;
    for (int j = 0; j < kHandPoseDof; ++j) init.theta[j] += u(rng);

    const HandFitResult fit =
        fit_hand(assets.right, frame, corr, Entity::RightHand, init,
                 SolverSettings{});
    const Points jt = regress_joints(assets.right, pose_hand(assets.right, truth));
    const Points jf =
        regress_joints(assets.right, pose_hand(assets.right, fit.params));
    CHECK(mpjpe(jf, jt) < 1.0);

    // accepted-step residuals never increase
    for (std::size_t i = 1; i < fit.residual_history.size(); ++i)
      CHECK(fit.residual_history[i] <= fit.residual_history[i - 1]);
  }
}

TEST_CASE("fit_hand can calibrate shape when asked") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  Rng rng(42);
  HandParams truth = testutil::random_hand_params(rng, 0.2, 0.3, 0.05);
  truth.beta[0] = 0.4;
  truth.beta[4] = -0.8;
  const MarkerFrame frame = testutil::exact_frame(
      assets, corr, truth, HandParams::rest(), ObjectPose{});

  HandParams init = truth;
  init.beta.setZero();
  init.theta[5] += 0.05;
  SolverSettings settings;
  settings.optimize_shape = true;
  settings.max_iterations = 200;
  const HandFitResult fit =
      fit_hand(assets.left, frame, corr, Entity::LeftHand, init, settings);
  CHECK(fit.rms_residual < 1e-7);
  CHECK((fit.params.beta - truth.beta).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("solve_sequence keeps a constant pose constant") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  Rng rng(43);
  const HandParams left = testutil::random_hand_params(rng);
  const HandParams right = testutil::random_hand_params(rng);
  const ObjectPose object = testutil::random_object_pose(rng);

  std::vector<MarkerFrame> frames;
  for (int f = 0; f < 4; ++f)
    frames.push_back(
        testutil::exact_frame(assets, corr, left, right, object, f / 30.0));

  const SequenceSolve solve =
      solve_sequence(assets, frames, corr, SolverSettings{});
  REQUIRE(solve.frames.size() == 4);
  for (const auto& rec : solve.frames) CHECK(rec.flags.empty());
  for (int f = 1; f < 4; ++f) {
    CHECK((solve.frames[f].left.theta - solve.frames[0].left.theta)
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK(std::abs(solve.frames[f].object.omega -
                   solve.frames[0].object.omega) < 1e-12);
  }
  CHECK_THROWS_AS(solve_sequence(assets, {}, corr, SolverSettings{}),
                  ParameterError);
}

TEST_CASE("solve_sequence interpolates hand gaps linearly") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  Rng rng(44);

  // left hand translates steadily; frames 3 and 4 lose every left marker
  std::vector<MarkerFrame> frames;
  std::vector<HandParams> truth;
  for (int f = 0; f < 7; ++f) {
    HandParams left = HandParams::rest();
    left.translation = Vec3(0.01 * f, 0, 0);
    truth.push_back(left);
    MarkerFrame frame = testutil::exact_frame(
        assets, corr, left, HandParams::rest(), ObjectPose{}, f / 30.0);
    if (f == 3 || f == 4) {
      for (const auto& c : corr)
        if (c.entity == Entity::LeftHand) frame.positions.erase(c.marker_id);
    }
    frames.push_back(frame);
  }

  const SequenceSolve solve =
      solve_sequence(assets, frames, corr, SolverSettings{});
  REQUIRE(solve.frames.size() == 7);
  CHECK(solve.frames[3].flags ==
        std::vector<FrameFlag>{FrameFlag::LeftGap});
  CHECK(solve.frames[4].flags ==
        std::vector<FrameFlag>{FrameFlag::LeftGap});
  CHECK(solve.frames[2].flags.empty());

  // interpolation between the anchor solves at frames 2 and 5
  const Vec3 expect3 = solve.frames[2].left.translation +
                       (solve.frames[5].left.translation -
                        solve.frames[2].left.translation) /
                           3.0;
  CHECK((solve.frames[3].left.translation - expect3).norm() < 1e-12);
  // and the anchors themselves matched the ground truth
  CHECK((solve.frames[5].left.translation - truth[5].translation).norm() <
        1e-8);
}

TEST_CASE("solve_sequence flags object gaps") {
  const CaptureAssets assets = testutil::test_assets();
  const auto corr = default_marker_set(assets);
  std::vector<MarkerFrame> frames;
  for (int f = 0; f < 3; ++f) {
    MarkerFrame frame = testutil::exact_frame(
        assets, corr, HandParams::rest(), HandParams::rest(), ObjectPose{},
        f / 30.0);
    if (f == 1) {
      for (const auto& c : corr)
        if (c.entity == Entity::ObjectBase || c.entity == Entity::ObjectTop)
          frame.positions.erase(c.marker_id);
    }
    frames.push_back(frame);
  }
  const SequenceSolve solve =
      solve_sequence(assets, frames, corr, SolverSettings{});
  CHECK(solve.frames[1].flags ==
        std::vector<FrameFlag>{FrameFlag::ObjectGap});
  CHECK(std::abs(solve.frames[1].object.omega) < 1e-9);
}

TEST_CASE("solve_sequence tracks a moving scene") {
  const CaptureAssets assets = testutil::test_assets();
  SynthConfig config;
  config.seed = 99;
  config.frame_count = 30;
  const SynthSequence synth = generate_sequence(assets, config);
  const SequenceSolve solve = solve_sequence(
      assets, synth.frames, synth.correspondences, SolverSettings{});

  double aae_sum = 0.0;
  for (int f = 0; f < config.frame_count; ++f) {
    aae_sum += std::abs(solve.frames[f].object.omega -
                        synth.gt[f].object.omega);
    CHECK((solve.frames[f].object.translation -
           synth.gt[f].object.translation).norm() < 1e-3);
  }
  CHECK(aae_sum / config.frame_count * 180.0 / M_PI < 0.5);
}

}  // TEST_SUITE("capture")
