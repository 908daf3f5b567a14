#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoikit/models.hpp"

namespace hoikit {

// ---------------------------------------------------------------------------
// Marker data
// ---------------------------------------------------------------------------

/// Fixed marker-to-vertex assignment. Correspondences are inputs here;
/// refining them is out of scope.
struct MarkerCorrespondence {
  std::string marker_id;
  Entity entity = Entity::ObjectBase;  // left/right hand, object base/top
  int vertex = 0;
};

/// One mocap frame. Markers absent from `positions` were occluded.
struct MarkerFrame {
  double time = 0.0;  // seconds
  std::map<std::string, Vec3> positions;
};

struct SolverSettings {
  int max_iterations = 50;
  double residual_tolerance = 1e-10;  // meters, rms
  double damping_init = 1e-3;
  double step_tolerance = 1e-10;
  bool optimize_shape = false;  // also solve beta (calibration fits)

  void validate() const;
};

// ---------------------------------------------------------------------------
// Rigid registration
// ---------------------------------------------------------------------------

struct RigidTransform {
  Vec3 rotation = Vec3::Zero();     // axis-angle
  Vec3 translation = Vec3::Zero();  // meters
  double rms_residual = 0.0;        // meters, rms over residual coordinates
};

/// Weighted Kabsch alignment: minimizes sum w_i ||R src_i + t - tgt_i||^2
/// with det(R) = +1. Throws DegenerateInputError for N < 3 or collinear
/// source points.
RigidTransform solve_rigid(const Points& source, const Points& target,
                           const std::optional<VecX>& weights = std::nullopt);

// ---------------------------------------------------------------------------
// Hinge calibration
// ---------------------------------------------------------------------------

struct HingeEstimate {
  Vec3 axis_direction = Vec3::UnitZ();  // unit, first nonzero component > 0
  Vec3 axis_origin = Vec3::Zero();      // gauge: no component along direction
  double rms_residual = 0.0;
};

/// Recovers the hinge from top-part poses expressed in the base frame.
/// Direction is the angle-weighted mean of the per-pose rotation axes
/// (sign-aligned before averaging); the origin solves the least-squares
/// pivot problem  min_p sum ||(R_i - I) p + t_i||^2  with the component of
/// p along the direction fixed to zero. Requires at least two poses rotated
/// more than 1 degree away from the first; throws DegenerateInputError
/// otherwise.
HingeEstimate estimate_axis(const std::vector<RigidTransform>& relative_poses);

// ---------------------------------------------------------------------------
// Articulation solve
// ---------------------------------------------------------------------------

/// Closed-form 1-D Procrustes about the hinge: expresses the top markers in
/// the base frame and returns the omega in (-pi, pi] that minimizes the
/// marker-to-vertex objective (global minimum). Throws DegenerateInputError
/// when every visible marker lies on the hinge line.
double solve_articulation(const ArticulatedObject& obj,
                          const RigidTransform& base_pose,
                          const MarkerFrame& frame,
                          const std::vector<MarkerCorrespondence>& corr);

// ---------------------------------------------------------------------------
// Hand fitting
// ---------------------------------------------------------------------------

struct HandFitResult {
  HandParams params;
  double rms_residual = 0.0;  // meters
  int accepted_steps = 0;
  bool converged = false;  // hit residual or step tolerance before max_iter
  // rms residual at the init followed by the value after every accepted
  // step; non-increasing by construction
  std::vector<double> residual_history;
};

/// Levenberg-Marquardt over (theta, translation), beta fixed unless
/// settings.optimize_shape. Jacobians by central finite differences.
/// Accepted-step residuals are non-increasing; returns the best iterate.
/// Throws DegenerateInputError when fewer than 4 markers are visible.
HandFitResult fit_hand(const HandModel& model, const MarkerFrame& frame,
                       const std::vector<MarkerCorrespondence>& corr,
                       Entity hand, const HandParams& init,
                       const SolverSettings& settings);

// ---------------------------------------------------------------------------
// Sequence solving
// ---------------------------------------------------------------------------

struct CaptureAssets {
  HandModel left;
  HandModel right;
  ArticulatedObject object;
};

/// Per-frame flags: entity solved normally if absent.
enum class FrameFlag {
  LeftGap,         // too few left-hand markers; parameters interpolated
  RightGap,
  ObjectGap,       // too few object markers; pose interpolated
  LeftNoConverge,  // LM stopped at max_iterations
  RightNoConverge,
};

std::string to_string(FrameFlag f);

struct FramePoses {
  HandParams left;
  HandParams right;
  ObjectPose object;
  std::vector<FrameFlag> flags;
};

struct SequenceSolve {
  std::vector<FramePoses> frames;
};

/// Frame-by-frame solve: rigid base pose + hinge articulation for the
/// object, LM fits for both hands, warm-started from the previous frame.
/// Occluded markers are dropped from the objective; frames below the marker
/// minimum (4 per hand, 3 per object part) are flagged and linearly
/// interpolated from the neighbouring solved frames.
SequenceSolve solve_sequence(const CaptureAssets& assets,
                             const std::vector<MarkerFrame>& frames,
                             const std::vector<MarkerCorrespondence>& corr,
                             const SolverSettings& settings);

}  // namespace hoikit
