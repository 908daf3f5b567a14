#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoikit/capture.hpp"
#include "hoikit/fields.hpp"
#include "hoikit/models.hpp"

namespace hoikit {

/// Identity of one recorded sequence as seen from one camera.
/// view_id 0 is the egocentric camera, 1..8 are allocentric cameras.
struct SequenceMeta {
  int subject_id = 0;
  int object_id = 0;
  int seq_id = 0;
  int view_id = 0;

  void validate() const;
};

enum class Protocol { P1, P2, P3 };
enum class Split { Train, Val, Test };

std::string to_string(Protocol protocol);
Protocol protocol_from_string(const std::string& name);
std::string to_string(Split split);

/// Split assignment for each metadata row. Rows outside the protocol's view
/// domain (e.g. egocentric rows under P1) map to nullopt. All views of one
/// sequence always land in the same split.
///
/// P1: allocentric rows; per object, sequences ordered by (subject, seq):
///     last -> test, second to last -> val, rest -> train.
/// P2: egocentric rows; same per-object rule.
/// P3: all views; subjects ordered by id: last two -> test, one before
///     -> val, rest -> train.
std::vector<std::optional<Split>> assign_splits(
    const std::vector<SequenceMeta>& rows, Protocol protocol);

/// Mean per-joint position error in mm after subtracting each side's root
/// (row 0). Inputs in meters, rows = landmarks.
double mpjpe(const Points& pred, const Points& gt);

/// Relative-root position error in mm: how far the predicted offset between
/// two roots is from the ground-truth offset.
double mrrpe(const Vec3& root_a_gt, const Vec3& root_b_gt,
             const Vec3& root_a_pred, const Vec3& root_b_pred);

/// Absolute articulation error in degrees. No angle wrap: hinge ranges stay
/// well inside one turn.
double aae(double pred_omega, double gt_omega);
double aae(const VecX& pred_omega, const VecX& gt_omega);

/// Root-relative vertex-to-vertex error in mm. Each side subtracts its own
/// root before comparison.
double v2v(const Points& pred, const Points& gt, const Vec3& pred_root,
           const Vec3& gt_root);

/// (alpha_mm, fraction) samples of the percentage-of-correct-distances
/// curve: fraction of vertices whose absolute field error is strictly below
/// alpha.
using PcdCurve = std::vector<std::pair<double, double>>;
PcdCurve pcd(const InteractionField& pred, const InteractionField& gt,
             const std::vector<double>& alphas_mm);

/// {1, 2, ..., 100} mm.
std::vector<double> default_pcd_alphas();

/// Aggregated metrics. Scalar errors are frame-uniform means over the
/// evaluated frames; PCD curves pool vertex errors across frames.
struct EvalReport {
  double mpjpe_left = 0.0;   // mm
  double mpjpe_right = 0.0;  // mm
  double mrrpe_lr = 0.0;     // mm, left root relative to right root
  double mrrpe_or = 0.0;     // mm, object root relative to right root
  double aae = 0.0;          // degrees
  double v2v_top = 0.0;      // mm
  double v2v_bottom = 0.0;   // mm
  int frame_count = 0;
  std::map<std::string, PcdCurve> pcd_curves;
  // Scalar breakdown keyed by object id; nested reports carry no curves.
  std::vector<std::pair<int, EvalReport>> per_object;

  void validate() const;
};

/// Ground truth and predictions for one sequence, frame-aligned. Field
/// vectors may be empty: fields are then derived from the poses.
struct SequenceEval {
  SequenceMeta meta;
  std::vector<FramePoses> gt;
  std::vector<FramePoses> pred;
  std::vector<HandObjectFields> gt_fields;
  std::vector<HandObjectFields> pred_fields;
};

struct EvalOptions {
  std::vector<double> pcd_alphas_mm = default_pcd_alphas();
  double field_clamp = kDefaultFieldClamp;
};

/// Evaluates every frame of every given sequence (no split filtering).
EvalReport evaluate_sequences(const CaptureAssets& assets,
                              const std::vector<SequenceEval>& sequences,
                              const EvalOptions& options = {});

/// Filters to the protocol's test split, checks prediction coverage, then
/// evaluates. Missing or extra prediction frames raise CoverageError with
/// every gap listed.
EvalReport evaluate_split(const CaptureAssets& assets,
                          const std::vector<SequenceEval>& sequences,
                          Protocol protocol, const EvalOptions& options = {});

}  // namespace hoikit
