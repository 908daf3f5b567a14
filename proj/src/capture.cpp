#include "hoikit/capture.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

namespace hoikit {

void SolverSettings::validate() const {
  if (max_iterations <= 0 || !(residual_tolerance > 0.0) ||
      !(damping_init > 0.0) || !(step_tolerance > 0.0))
    throw ParameterError("solver settings must be positive");
}

std::string to_string(FrameFlag f) {
  switch (f) {
    case FrameFlag::LeftGap: return "left:gap";
    case FrameFlag::RightGap: return "right:gap";
    case FrameFlag::ObjectGap: return "object:gap";
    case FrameFlag::LeftNoConverge: return "left:no-converge";
    case FrameFlag::RightNoConverge: return "right:no-converge";
  }
  return "unknown";
}

namespace {

double wrap_to_pi(double x) {
  double y = std::fmod(x + M_PI, 2.0 * M_PI);
  if (y <= 0.0) y += 2.0 * M_PI;
  return y - M_PI;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rigid registration
// ---------------------------------------------------------------------------

RigidTransform solve_rigid(const Points& source, const Points& target,
                           const std::optional<VecX>& weights) {
  const int n = static_cast<int>(source.rows());
  if (n < 3) throw DegenerateInputError("solve_rigid needs at least 3 points");
  if (target.rows() != n)
    throw ParameterError("source and target point counts differ");
  if (!source.allFinite() || !target.allFinite())
    throw ParameterError("points must be finite");

  VecX w = weights.value_or(VecX::Ones(n));
  if (w.size() != n) throw ParameterError("weight count does not match points");
  if (w.minCoeff() < 0.0) throw ParameterError("weights must be nonnegative");
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw ParameterError("weights must not all be zero");

  const Eigen::RowVector3d cs = (w.transpose() * source) / wsum;
  const Eigen::RowVector3d ct = (w.transpose() * target) / wsum;
  const Points xs = source.rowwise() - cs;
  const Points ys = target.rowwise() - ct;

  {
    // a collinear (or coincident) source leaves a rotation DOF unobservable
    Eigen::JacobiSVD<MatX> src_svd(xs);
    const auto& s = src_svd.singularValues();
    if (s(1) <= 1e-9 * std::max(s(0), 1e-12))
      throw DegenerateInputError("solve_rigid: source points are collinear");
  }

  const Mat3 cov = xs.transpose() * w.asDiagonal() * ys;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0
                ? -1.0
                : 1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();

  RigidTransform out;
  out.rotation = axis_angle_from_rotation(r);
  out.translation = ct.transpose() - r * cs.transpose();

  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 delta = r * source.row(i).transpose() + out.translation -
                       target.row(i).transpose();
    sq += w(i) * delta.squaredNorm();
  }
  // per-coordinate rms so the value is comparable to the marker noise sigma
  out.rms_residual = std::sqrt(sq / (3.0 * wsum));
  return out;
}

// ---------------------------------------------------------------------------
// Hinge calibration
// ---------------------------------------------------------------------------

HingeEstimate estimate_axis(const std::vector<RigidTransform>& relative_poses) {
  if (relative_poses.size() < 2)
    throw DegenerateInputError("estimate_axis needs at least 2 poses");

  const double min_angle = 1.0 * M_PI / 180.0;
  const Mat3 r0 = rotation_from_axis_angle(relative_poses.front().rotation);
  int moving = 0;
  for (const auto& pose : relative_poses) {
    if (rotation_angle_between(rotation_from_axis_angle(pose.rotation), r0) >
        min_angle)
      ++moving;
  }
  if (moving < 2)
    throw DegenerateInputError(
        "estimate_axis: rotations are too close to the first frame, "
        "axis unobservable");

  // Angle-weighted mean of rotation axes: each rotation vector is already
  // axis * angle, so sign-align and sum.
  Vec3 reference = Vec3::Zero();
  for (const auto& pose : relative_poses)
    if (pose.rotation.norm() > reference.norm()) reference = pose.rotation;

  Vec3 dir_acc = Vec3::Zero();
  for (const auto& pose : relative_poses)
    dir_acc += pose.rotation.dot(reference) < 0.0 ? -pose.rotation
                                                  : pose.rotation;
  if (dir_acc.norm() < 1e-12)
    throw DegenerateInputError("estimate_axis: rotation axes cancel out");

  Vec3 dir = dir_acc.normalized();
  for (int c = 0; c < 3; ++c) {
    if (std::abs(dir(c)) > 1e-12) {
      if (dir(c) < 0.0) dir = -dir;
      break;
    }
  }

  // Pivot least squares, restricted to the plane orthogonal to dir.
  const Vec3 seed = std::abs(dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 b1 = dir.cross(seed).normalized();
  const Vec3 b2 = dir.cross(b1);
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = b1;
  basis.col(1) = b2;

  const int n = static_cast<int>(relative_poses.size());
  MatX a(3 * n, 2);
  VecX rhs(3 * n);
  for (int i = 0; i < n; ++i) {
    const Mat3 ri = rotation_from_axis_angle(relative_poses[i].rotation);
    a.middleRows<3>(3 * i) = (ri - Mat3::Identity()) * basis;
    rhs.segment<3>(3 * i) = -relative_poses[i].translation;
  }
  const Eigen::Vector2d y = a.colPivHouseholderQr().solve(rhs);

  HingeEstimate out;
  out.axis_direction = dir;
  out.axis_origin = basis * y;
  out.rms_residual = std::sqrt((a * y - rhs).squaredNorm() / n);
  return out;
}

// ---------------------------------------------------------------------------
// Articulation solve
// ---------------------------------------------------------------------------

double solve_articulation(const ArticulatedObject& obj,
                          const RigidTransform& base_pose,
                          const MarkerFrame& frame,
                          const std::vector<MarkerCorrespondence>& corr) {
  const Mat3 r = rotation_from_axis_angle(base_pose.rotation);
  const Vec3& d = obj.axis_direction;

  double c_sum = 0.0;
  double s_sum = 0.0;
  double max_lever_sq = 0.0;
  int visible = 0;
  for (const auto& mc : corr) {
    if (mc.entity != Entity::ObjectTop) continue;
    const auto it = frame.positions.find(mc.marker_id);
    if (it == frame.positions.end()) continue;
    ++visible;

    const Vec3 in_base = r.transpose() * (it->second - base_pose.translation);
    const Vec3 p =
        obj.top_part.vertices.row(mc.vertex).transpose() - obj.axis_origin;
    const Vec3 q = in_base - obj.axis_origin;
    const Vec3 p_perp = p - d * d.dot(p);
    const Vec3 q_perp = q - d * d.dot(q);
    max_lever_sq = std::max(max_lever_sq, p_perp.squaredNorm());
    c_sum += q_perp.dot(p_perp);
    s_sum += q_perp.dot(d.cross(p_perp));
  }

  if (visible == 0)
    throw DegenerateInputError("solve_articulation: no visible top markers");
  if (max_lever_sq < 1e-18)
    throw DegenerateInputError(
        "solve_articulation: all markers lie on the hinge line");

  return wrap_to_pi(obj.rest_angle + std::atan2(s_sum, c_sum));
}

// ---------------------------------------------------------------------------
// Hand fitting
// ---------------------------------------------------------------------------

namespace {

struct HandObjective {
  const HandModel& model;
  std::vector<int> vertex_indices;
  Points observed;  // m x 3
  bool optimize_shape;
  VecX fixed_beta;

  int param_count() const {
    return kHandPoseDof + 3 + (optimize_shape ? kHandShapeDof : 0);
  }

  HandParams unpack(const VecX& x) const {
    HandParams p;
    p.theta = x.head(kHandPoseDof);
    p.translation = x.segment<3>(kHandPoseDof);
    p.beta = optimize_shape ? VecX(x.tail(kHandShapeDof)) : fixed_beta;
    return p;
  }

  VecX pack(const HandParams& p) const {
    VecX x(param_count());
    x.head(kHandPoseDof) = p.theta;
    x.segment<3>(kHandPoseDof) = p.translation;
    if (optimize_shape) x.tail(kHandShapeDof) = p.beta;
    return x;
  }

  VecX residual(const VecX& x) const {
    const Points posed = pose_hand_subset(model, unpack(x), vertex_indices);
    const Points diff = posed - observed;
    return Eigen::Map<const VecX>(diff.data(), diff.size());
  }

  double rms(const VecX& r) const {
    return std::sqrt(r.squaredNorm() / static_cast<double>(observed.rows()));
  }
};

}  // namespace

HandFitResult fit_hand(const HandModel& model, const MarkerFrame& frame,
                       const std::vector<MarkerCorrespondence>& corr,
                       Entity hand, const HandParams& init,
                       const SolverSettings& settings) {
  settings.validate();
  init.validate();
  if (hand != Entity::LeftHand && hand != Entity::RightHand)
    throw ParameterError("fit_hand expects a hand entity");

  HandObjective obj{model, {}, {}, settings.optimize_shape, init.beta};
  std::vector<Vec3> seen;
  for (const auto& mc : corr) {
    if (mc.entity != hand) continue;
    const auto it = frame.positions.find(mc.marker_id);
    if (it == frame.positions.end()) continue;
    obj.vertex_indices.push_back(mc.vertex);
    seen.push_back(it->second);
  }
  const int m = static_cast<int>(seen.size());
  if (m < 4)
    throw DegenerateInputError("fit_hand requires at least 4 visible markers, got " +
                               std::to_string(m));
  obj.observed.resize(m, 3);
  for (int i = 0; i < m; ++i) obj.observed.row(i) = seen[i].transpose();

  const int np = obj.param_count();
  const double fd_step = 1e-6;

  VecX x = obj.pack(init);
  VecX r = obj.residual(x);
  double cost = r.squaredNorm();

  HandFitResult result;
  result.params = init;
  result.rms_residual = obj.rms(r);
  result.accepted_steps = 0;
  result.residual_history.push_back(result.rms_residual);
  result.converged = result.rms_residual <= settings.residual_tolerance;
  if (result.converged) return result;

  double lambda = settings.damping_init;
  MatX jac(r.size(), np);
  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    for (int j = 0; j < np; ++j) {
      VecX xp = x;
      VecX xm = x;
      xp(j) += fd_step;
      xm(j) -= fd_step;
      jac.col(j) = (obj.residual(xp) - obj.residual(xm)) / (2.0 * fd_step);
    }
    const MatX h = jac.transpose() * jac;
    const VecX g = jac.transpose() * r;
    const VecX diag = h.diagonal().cwiseMax(1e-12);

    bool accepted = false;
    while (!accepted) {
      MatX damped = h;
      damped.diagonal() += lambda * diag;
      const VecX step = damped.ldlt().solve(-g);
      if (step.norm() < settings.step_tolerance) {
        result.converged = true;
        return result;
      }
      const VecX x_try = x + step;
      const VecX r_try = obj.residual(x_try);
      const double cost_try = r_try.squaredNorm();
      if (cost_try < cost) {
        x = x_try;
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        ++result.accepted_steps;
        result.params = obj.unpack(x);
        result.rms_residual = obj.rms(r);
        result.residual_history.push_back(result.rms_residual);
      } else {
        lambda *= 10.0;
        if (lambda > 1e12) {
          // no descent direction left at machine scale
          result.converged = true;
          return result;
        }
      }
    }
    if (result.rms_residual <= settings.residual_tolerance) {
      result.converged = true;
      return result;
    }
  }
  result.converged = false;
  return result;
}

// ---------------------------------------------------------------------------
// Sequence solving
// ---------------------------------------------------------------------------

namespace {

struct EntityMarkers {
  Points source;  // canonical vertices
  Points target;  // observed markers
  int count = 0;
};

EntityMarkers gather(const Points& canonical_vertices, Entity entity,
                     const MarkerFrame& frame,
                     const std::vector<MarkerCorrespondence>& corr) {
  std::vector<int> verts;
  std::vector<Vec3> obs;
  for (const auto& mc : corr) {
    if (mc.entity != entity) continue;
    const auto it = frame.positions.find(mc.marker_id);
    if (it == frame.positions.end()) continue;
    verts.push_back(mc.vertex);
    obs.push_back(it->second);
  }
  EntityMarkers out;
  out.count = static_cast<int>(verts.size());
  out.source.resize(out.count, 3);
  out.target.resize(out.count, 3);
  for (int i = 0; i < out.count; ++i) {
    out.source.row(i) = canonical_vertices.row(verts[i]);
    out.target.row(i) = obs[i].transpose();
  }
  return out;
}

int count_visible(Entity entity, const MarkerFrame& frame,
                  const std::vector<MarkerCorrespondence>& corr) {
  int n = 0;
  for (const auto& mc : corr)
    if (mc.entity == entity && frame.positions.count(mc.marker_id)) ++n;
  return n;
}

HandParams lerp(const HandParams& a, const HandParams& b, double t) {
  HandParams out;
  out.theta = (1.0 - t) * a.theta + t * b.theta;
  out.beta = (1.0 - t) * a.beta + t * b.beta;
  out.translation = (1.0 - t) * a.translation + t * b.translation;
  return out;
}

ObjectPose lerp(const ObjectPose& a, const ObjectPose& b, double t) {
  ObjectPose out;
  out.omega = (1.0 - t) * a.omega + t * b.omega;
  out.rotation = (1.0 - t) * a.rotation + t * b.rotation;
  out.translation = (1.0 - t) * a.translation + t * b.translation;
  return out;
}

/// Linear parameter interpolation across gap frames; ends clamp to the
/// nearest solved frame.
template <typename P, typename Getter>
void fill_gaps(std::vector<FramePoses>& frames, const std::vector<bool>& solved,
               Getter get, const char* entity_name) {
  const int n = static_cast<int>(frames.size());
  std::vector<int> solved_idx;
  for (int i = 0; i < n; ++i)
    if (solved[i]) solved_idx.push_back(i);
  if (solved_idx.empty())
    throw DataError(std::string("no solvable frames for ") + entity_name);

  for (int i = 0; i < n; ++i) {
    if (solved[i]) continue;
    const auto right =
        std::lower_bound(solved_idx.begin(), solved_idx.end(), i);
    if (right == solved_idx.begin()) {
      get(frames[i]) = get(frames[*right]);
    } else if (right == solved_idx.end()) {
      get(frames[i]) = get(frames[solved_idx.back()]);
    } else {
      const int b = *right;
      const int a = *(right - 1);
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      get(frames[i]) = lerp(get(frames[a]), get(frames[b]), t);
    }
  }
}

}  // namespace

SequenceSolve solve_sequence(const CaptureAssets& assets,
                             const std::vector<MarkerFrame>& frames,
                             const std::vector<MarkerCorrespondence>& corr,
                             const SolverSettings& settings) {
  if (frames.empty()) throw ParameterError("empty marker sequence");
  settings.validate();

  const int n = static_cast<int>(frames.size());
  SequenceSolve out;
  out.frames.resize(n);
  std::vector<bool> left_ok(n, false), right_ok(n, false), object_ok(n, false);

  HandParams left_warm = HandParams::rest();
  HandParams right_warm = HandParams::rest();
  bool left_primed = false;
  bool right_primed = false;

  // Before any warm start exists, align the global pose by rigidly fitting
  // the markers that ride on the root joint; LM then only has to pull the
  // fingers in.
  const auto root_aligned_init = [&corr](const HandModel& model,
                                         const MarkerFrame& frame,
                                         Entity hand) {
    HandParams init = HandParams::rest();
    std::vector<int> verts;
    std::vector<Vec3> world;
    for (const auto& c : corr) {
      if (c.entity != hand) continue;
      const auto it = frame.positions.find(c.marker_id);
      if (it == frame.positions.end()) continue;
      Eigen::Index joint = 0;
      model.skinning_weights.row(c.vertex).maxCoeff(&joint);
      if (joint != 0) continue;
      verts.push_back(c.vertex);
      world.push_back(it->second);
    }
    if (verts.size() < 3) return init;
    Points src(static_cast<Eigen::Index>(verts.size()), 3);
    Points dst(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) {
      src.row(static_cast<Eigen::Index>(i)) =
          model.tmpl.vertices.row(verts[i]);
      dst.row(static_cast<Eigen::Index>(i)) = world[i].transpose();
    }
    try {
      const RigidTransform pose = solve_rigid(src, dst);
      init.theta.head(3) = pose.rotation;
      init.translation = pose.translation;
    } catch (const DegenerateInputError&) {
      // fall back to the rest pose
    }
    return init;
  };

  for (int f = 0; f < n; ++f) {
    FramePoses& rec = out.frames[f];
    rec.left = left_warm;
    rec.right = right_warm;

    // object: rigid base plus hinge angle
    const int base_visible = count_visible(Entity::ObjectBase, frames[f], corr);
    const int top_visible = count_visible(Entity::ObjectTop, frames[f], corr);
    if (base_visible >= 3 && top_visible >= 3) {
      try {
        const EntityMarkers base = gather(assets.object.base_part.vertices,
                                          Entity::ObjectBase, frames[f], corr);
        const RigidTransform base_pose =
            solve_rigid(base.source, base.target);
        rec.object.rotation = base_pose.rotation;
        rec.object.translation = base_pose.translation;
        rec.object.omega =
            solve_articulation(assets.object, base_pose, frames[f], corr);
        object_ok[f] = true;
      } catch (const DegenerateInputError&) {
        object_ok[f] = false;
      }
    }
    if (!object_ok[f]) rec.flags.push_back(FrameFlag::ObjectGap);

    // hands
    auto fit_one = [&](Entity hand, HandParams& warm, bool& primed,
                       const HandModel& model, FrameFlag gap_flag,
                       FrameFlag noconv_flag, std::vector<bool>& ok) {
      if (count_visible(hand, frames[f], corr) < 4) {
        rec.flags.push_back(gap_flag);
        return HandParams(warm);
      }
      const HandParams init =
          primed ? warm : root_aligned_init(model, frames[f], hand);
      const HandFitResult fit =
          fit_hand(model, frames[f], corr, hand, init, settings);
      ok[f] = true;
      if (!fit.converged) rec.flags.push_back(noconv_flag);
      warm = fit.params;
      primed = true;
      return fit.params;
    };
    rec.left =
        fit_one(Entity::LeftHand, left_warm, left_primed, assets.left,
                FrameFlag::LeftGap, FrameFlag::LeftNoConverge, left_ok);
    rec.right =
        fit_one(Entity::RightHand, right_warm, right_primed, assets.right,
                FrameFlag::RightGap, FrameFlag::RightNoConverge, right_ok);
  }

  fill_gaps<HandParams>(
      out.frames, left_ok, [](FramePoses& p) -> HandParams& { return p.left; },
      "left hand");
  fill_gaps<HandParams>(
      out.frames, right_ok,
      [](FramePoses& p) -> HandParams& { return p.right; }, "right hand");
  fill_gaps<ObjectPose>(
      out.frames, object_ok,
      [](FramePoses& p) -> ObjectPose& { return p.object; }, "object");

  return out;
}

}  // namespace hoikit
