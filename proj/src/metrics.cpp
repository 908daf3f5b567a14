#include "hoikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

namespace hoikit {

void SequenceMeta::validate() const {
  if (subject_id < 0 || object_id < 0 || seq_id < 0)
    throw ParameterError("sequence ids must be non-negative");
  if (view_id < 0 || view_id > 8)
    throw ParameterError("view id must lie in [0, 8]");
}

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::P1: return "P1";
    case Protocol::P2: return "P2";
    case Protocol::P3: return "P3";
  }
  throw ParameterError("unknown protocol");
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "P1" || name == "p1") return Protocol::P1;
  if (name == "P2" || name == "p2") return Protocol::P2;
  if (name == "P3" || name == "p3") return Protocol::P3;
  throw ParameterError("unknown protocol name: " + name);
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw ParameterError("unknown split");
}

std::vector<std::optional<Split>> assign_splits(
    const std::vector<SequenceMeta>& rows, Protocol protocol) {
  for (const auto& row : rows) row.validate();
  std::vector<std::optional<Split>> out(rows.size());

  if (protocol == Protocol::P3) {
    std::set<int> subject_set;
    for (const auto& row : rows) subject_set.insert(row.subject_id);
    std::vector<int> subjects(subject_set.begin(), subject_set.end());
    std::map<int, Split> by_subject;
    const int n = static_cast<int>(subjects.size());
    for (int i = 0; i < n; ++i) {
      Split split = Split::Train;
      if (i >= n - 2)
        split = Split::Test;
      else if (i == n - 3)
        split = Split::Val;
      by_subject[subjects[i]] = split;
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      out[i] = by_subject.at(rows[i].subject_id);
    return out;
  }

  const auto applicable = [&](const SequenceMeta& m) {
    return protocol == Protocol::P1 ? m.view_id >= 1 : m.view_id == 0;
  };

  // A sequence is identified independent of view, so held-out sequences are
  // held out from every camera at once.
  std::map<int, std::set<std::pair<int, int>>> per_object;
  for (const auto& row : rows)
    if (applicable(row))
      per_object[row.object_id].insert({row.subject_id, row.seq_id});

  std::map<std::tuple<int, int, int>, Split> assignment;
  for (const auto& [object_id, keys] : per_object) {
    std::vector<std::pair<int, int>> ordered(keys.begin(), keys.end());
    const int n = static_cast<int>(ordered.size());
    for (int i = 0; i < n; ++i) {
      Split split = Split::Train;
      if (i == n - 1)
        split = Split::Test;
      else if (i == n - 2)
        split = Split::Val;
      assignment[{object_id, ordered[i].first, ordered[i].second}] = split;
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!applicable(rows[i])) continue;
    out[i] = assignment.at(
        {rows[i].object_id, rows[i].subject_id, rows[i].seq_id});
  }
  return out;
}

namespace {

void check_point_pair(const Points& pred, const Points& gt,
                      const char* what) {
  if (pred.rows() != gt.rows())
    throw ParameterError(std::string(what) + ": row counts differ");
  if (pred.rows() == 0)
    throw ParameterError(std::string(what) + ": empty input");
  if (!pred.allFinite() || !gt.allFinite())
    throw ParameterError(std::string(what) + ": non-finite input");
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

double mpjpe(const Points& pred, const Points& gt) {
  check_point_pair(pred, gt, "mpjpe");
  const Eigen::RowVector3d pred_root = pred.row(0);
  const Eigen::RowVector3d gt_root = gt.row(0);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < pred.rows(); ++j)
    sum += ((pred.row(j) - pred_root) - (gt.row(j) - gt_root)).norm();
  return 1000.0 * sum / static_cast<double>(pred.rows());
}

double mrrpe(const Vec3& root_a_gt, const Vec3& root_b_gt,
             const Vec3& root_a_pred, const Vec3& root_b_pred) {
  if (!root_a_gt.allFinite() || !root_b_gt.allFinite() ||
      !root_a_pred.allFinite() || !root_b_pred.allFinite())
    throw ParameterError("mrrpe: non-finite root");
  return 1000.0 *
         ((root_a_pred - root_b_pred) - (root_a_gt - root_b_gt)).norm();
}

double aae(double pred_omega, double gt_omega) {
  if (!std::isfinite(pred_omega) || !std::isfinite(gt_omega))
    throw ParameterError("aae: non-finite angle");
  return std::abs(pred_omega - gt_omega) * kRadToDeg;
}

double aae(const VecX& pred_omega, const VecX& gt_omega) {
  if (pred_omega.size() != gt_omega.size())
    throw ParameterError("aae: frame counts differ");
  if (pred_omega.size() == 0) throw ParameterError("aae: empty input");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred_omega.size(); ++i)
    sum += aae(pred_omega[i], gt_omega[i]);
  return sum / static_cast<double>(pred_omega.size());
}

double v2v(const Points& pred, const Points& gt, const Vec3& pred_root,
           const Vec3& gt_root) {
  check_point_pair(pred, gt, "v2v");
  if (!pred_root.allFinite() || !gt_root.allFinite())
    throw ParameterError("v2v: non-finite root");
  const Eigen::RowVector3d pr = pred_root.transpose();
  const Eigen::RowVector3d gr = gt_root.transpose();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    sum += ((pred.row(i) - pr) - (gt.row(i) - gr)).norm();
  return 1000.0 * sum / static_cast<double>(pred.rows());
}

PcdCurve pcd(const InteractionField& pred, const InteractionField& gt,
             const std::vector<double>& alphas_mm) {
  if (pred.distances.size() != gt.distances.size())
    throw ParameterError("pcd: field lengths differ");
  if (pred.distances.size() == 0) throw ParameterError("pcd: empty fields");
  PcdCurve curve;
  curve.reserve(alphas_mm.size());
  const Eigen::Index n = pred.distances.size();
  for (const double alpha_mm : alphas_mm) {
    const double alpha_m = alpha_mm / 1000.0;
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(pred.distances[i] - gt.distances[i]) < alpha_m) ++hits;
    curve.emplace_back(alpha_mm,
                       static_cast<double>(hits) / static_cast<double>(n));
  }
  return curve;
}

std::vector<double> default_pcd_alphas() {
  std::vector<double> alphas(100);
  for (int i = 0; i < 100; ++i) alphas[static_cast<std::size_t>(i)] = i + 1;
  return alphas;
}

void EvalReport::validate() const {
  const double scalars[] = {mpjpe_left, mpjpe_right, mrrpe_lr, mrrpe_or,
                            aae,        v2v_top,     v2v_bottom};
  for (const double v : scalars)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParameterError("report metrics must be finite and >= 0");
  for (const auto& [name, curve] : pcd_curves) {
    double prev_alpha = -1.0, prev_frac = 0.0;
    for (const auto& [alpha, frac] : curve) {
      if (frac < 0.0 || frac > 1.0)
        throw ParameterError("PCD fraction outside [0, 1] in " + name);
      if (alpha > prev_alpha && frac < prev_frac)
        throw ParameterError("PCD curve decreasing in " + name);
      prev_alpha = alpha;
      prev_frac = frac;
    }
  }
  for (const auto& [object_id, report] : per_object) {
    (void)object_id;
    report.validate();
  }
}

namespace {

struct ScalarAccum {
  double mpjpe_l = 0, mpjpe_r = 0, mrrpe_lr = 0, mrrpe_or = 0;
  double aae_deg = 0, v2v_top = 0, v2v_bottom = 0;
  int frames = 0;

  void fill(EvalReport& report) const {
    const double n = frames > 0 ? static_cast<double>(frames) : 1.0;
    report.mpjpe_left = mpjpe_l / n;
    report.mpjpe_right = mpjpe_r / n;
    report.mrrpe_lr = mrrpe_lr / n;
    report.mrrpe_or = mrrpe_or / n;
    report.aae = aae_deg / n;
    report.v2v_top = v2v_top / n;
    report.v2v_bottom = v2v_bottom / n;
    report.frame_count = frames;
  }
};

struct PcdAccum {
  std::vector<double> alphas_mm;
  std::map<std::string, std::vector<long long>> hits;
  std::map<std::string, long long> totals;

  void add(const std::string& name, const InteractionField& pred,
           const InteractionField& gt) {
    if (pred.distances.size() != gt.distances.size())
      throw ParameterError("field lengths differ between prediction and "
                           "ground truth for " + name);
    auto& h = hits[name];
    if (h.empty()) h.assign(alphas_mm.size(), 0);
    const Eigen::Index n = pred.distances.size();
    for (std::size_t a = 0; a < alphas_mm.size(); ++a) {
      const double alpha_m = alphas_mm[a] / 1000.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(pred.distances[i] - gt.distances[i]) < alpha_m) ++h[a];
    }
    totals[name] += n;
  }

  void fill(EvalReport& report) const {
    for (const auto& [name, h] : hits) {
      PcdCurve curve;
      curve.reserve(alphas_mm.size());
      const double total = static_cast<double>(totals.at(name));
      for (std::size_t a = 0; a < alphas_mm.size(); ++a)
        curve.emplace_back(alphas_mm[a],
                           total > 0 ? static_cast<double>(h[a]) / total : 0);
      report.pcd_curves[name] = std::move(curve);
    }
  }
};

HandObjectFields derive_fields(const CaptureAssets& assets,
                               const FramePoses& poses, double d_max) {
  const Mesh left = pose_hand(assets.left, poses.left);
  const Mesh right = pose_hand(assets.right, poses.right);
  const auto [base, top] = pose_object(assets.object, poses.object);
  const Mesh object = merge_object_mesh(base, top);
  return extract_gt_fields(left, right, object, d_max);
}

void accumulate_frame(const CaptureAssets& assets, const FramePoses& gt,
                      const FramePoses& pred, ScalarAccum& overall,
                      ScalarAccum& by_object) {
  const Points jl_gt = regress_joints(assets.left, pose_hand(assets.left, gt.left));
  const Points jl_pred =
      regress_joints(assets.left, pose_hand(assets.left, pred.left));
  const Points jr_gt =
      regress_joints(assets.right, pose_hand(assets.right, gt.right));
  const Points jr_pred =
      regress_joints(assets.right, pose_hand(assets.right, pred.right));

  const auto [base_gt, top_gt] = pose_object(assets.object, gt.object);
  const auto [base_pred, top_pred] = pose_object(assets.object, pred.object);
  const Vec3 obj_root_gt = base_gt.vertices.colwise().mean().transpose();
  const Vec3 obj_root_pred = base_pred.vertices.colwise().mean().transpose();

  const Vec3 left_root_gt = jl_gt.row(0).transpose();
  const Vec3 left_root_pred = jl_pred.row(0).transpose();
  const Vec3 right_root_gt = jr_gt.row(0).transpose();
  const Vec3 right_root_pred = jr_pred.row(0).transpose();

  ScalarAccum frame;
  frame.mpjpe_l = mpjpe(jl_pred, jl_gt);
  frame.mpjpe_r = mpjpe(jr_pred, jr_gt);
  frame.mrrpe_lr =
      mrrpe(left_root_gt, right_root_gt, left_root_pred, right_root_pred);
  frame.mrrpe_or =
      mrrpe(obj_root_gt, right_root_gt, obj_root_pred, right_root_pred);
  frame.aae_deg = aae(pred.object.omega, gt.object.omega);
  // Both parts measure against the bottom-part center.
  frame.v2v_top =
      v2v(top_pred.vertices, top_gt.vertices, obj_root_pred, obj_root_gt);
  frame.v2v_bottom =
      v2v(base_pred.vertices, base_gt.vertices, obj_root_pred, obj_root_gt);
  frame.frames = 1;

  for (ScalarAccum* acc : {&overall, &by_object}) {
    acc->mpjpe_l += frame.mpjpe_l;
    acc->mpjpe_r += frame.mpjpe_r;
    acc->mrrpe_lr += frame.mrrpe_lr;
    acc->mrrpe_or += frame.mrrpe_or;
    acc->aae_deg += frame.aae_deg;
    acc->v2v_top += frame.v2v_top;
    acc->v2v_bottom += frame.v2v_bottom;
    acc->frames += 1;
  }
}

std::string describe(const SequenceMeta& meta) {
  std::ostringstream out;
  out << "subject " << meta.subject_id << " object " << meta.object_id
      << " seq " << meta.seq_id << " view " << meta.view_id;
  return out.str();
}

void check_coverage(const std::vector<SequenceEval>& sequences) {
  std::vector<std::string> gaps;
  for (const auto& seq : sequences) {
    if (seq.gt.empty())
      throw ParameterError("sequence " + describe(seq.meta) +
                           " has no ground-truth frames");
    if (seq.pred.size() != seq.gt.size()) {
      std::ostringstream line;
      line << describe(seq.meta) << ": predictions cover " << seq.pred.size()
           << " of " << seq.gt.size() << " frames";
      gaps.push_back(line.str());
    }
    if (!seq.gt_fields.empty() && seq.gt_fields.size() != seq.gt.size())
      throw ParameterError("sequence " + describe(seq.meta) +
                           " has a ground-truth field count mismatch");
    if (!seq.pred_fields.empty() && seq.pred_fields.size() != seq.gt.size())
      throw ParameterError("sequence " + describe(seq.meta) +
                           " has a predicted field count mismatch");
  }
  if (!gaps.empty()) {
    std::string message = "prediction coverage incomplete: ";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      if (i > 0) message += "; ";
      message += gaps[i];
    }
    throw CoverageError(message);
  }
}

}  // namespace

EvalReport evaluate_sequences(const CaptureAssets& assets,
                              const std::vector<SequenceEval>& sequences,
                              const EvalOptions& options) {
  if (sequences.empty()) throw ParameterError("no sequences to evaluate");
  if (options.pcd_alphas_mm.empty())
    throw ParameterError("PCD alpha grid must be non-empty");
  check_coverage(sequences);

  ScalarAccum overall;
  std::map<int, ScalarAccum> per_object;
  PcdAccum pcd_accum;
  pcd_accum.alphas_mm = options.pcd_alphas_mm;

  for (const auto& seq : sequences) {
    for (std::size_t f = 0; f < seq.gt.size(); ++f) {
      accumulate_frame(assets, seq.gt[f], seq.pred[f], overall,
                       per_object[seq.meta.object_id]);
      const HandObjectFields gt_fields =
          seq.gt_fields.empty()
              ? derive_fields(assets, seq.gt[f], options.field_clamp)
              : seq.gt_fields[f];
      const HandObjectFields pred_fields =
          seq.pred_fields.empty()
              ? derive_fields(assets, seq.pred[f], options.field_clamp)
              : seq.pred_fields[f];
      pcd_accum.add("left_to_object", pred_fields.left_to_object,
                    gt_fields.left_to_object);
      pcd_accum.add("right_to_object", pred_fields.right_to_object,
                    gt_fields.right_to_object);
      pcd_accum.add("object_to_left", pred_fields.object_to_left,
                    gt_fields.object_to_left);
      pcd_accum.add("object_to_right", pred_fields.object_to_right,
                    gt_fields.object_to_right);
    }
  }

  EvalReport report;
  overall.fill(report);
  pcd_accum.fill(report);
  for (const auto& [object_id, accum] : per_object) {
    EvalReport sub;
    accum.fill(sub);
    report.per_object.emplace_back(object_id, std::move(sub));
  }
  report.validate();
  return report;
}

EvalReport evaluate_split(const CaptureAssets& assets,
                          const std::vector<SequenceEval>& sequences,
                          Protocol protocol, const EvalOptions& options) {
  if (sequences.empty()) throw ParameterError("no sequences to evaluate");
  std::vector<SequenceMeta> rows;
  rows.reserve(sequences.size());
  for (const auto& seq : sequences) rows.push_back(seq.meta);
  const auto splits = assign_splits(rows, protocol);

  std::vector<SequenceEval> test;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    if (splits[i] == Split::Test) test.push_back(sequences[i]);
  if (test.empty())
    throw CoverageError("no test sequences under protocol " +
                        to_string(protocol));
  return evaluate_sequences(assets, test, options);
}

}  // namespace hoikit
