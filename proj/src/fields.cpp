#include "hoikit/fields.hpp"

#include <algorithm>
#include <cmath>

#include "hoikit/kdtree.hpp"

namespace hoikit {

void InteractionField::validate() const {
  if (!(d_max > 0.0)) throw DataError("field clamp d_max must be > 0");
  if (!distances.allFinite())
    throw DataError("field distances must be finite");
  if ((distances.array() < 0.0).any() ||
      (distances.array() > d_max).any())
    throw DataError("field distances must lie in [0, d_max]");
}

namespace {

void check_field_inputs(const Points& source, const Points& target,
                        double d_max) {
  if (!(d_max > 0.0)) throw ParameterError("field clamp d_max must be > 0");
  if (source.rows() == 0 || target.rows() == 0)
    throw DegenerateInputError("field kernels need non-empty point sets");
  if (!source.allFinite() || !target.allFinite())
    throw ParameterError("field kernels need finite coordinates");
}

}  // namespace

InteractionField field_bruteforce(const Points& source, const Points& target,
                                  double d_max, Entity source_tag,
                                  Entity target_tag) {
  check_field_inputs(source, target, d_max);
  InteractionField field;
  field.source = source_tag;
  field.target = target_tag;
  field.d_max = d_max;
  field.distances.resize(source.rows());
  const double bound_sq = d_max * d_max;
  for (Eigen::Index i = 0; i < source.rows(); ++i) {
    const double* p = source.row(i).data();
    double best_sq = bound_sq;
    for (Eigen::Index j = 0; j < target.rows(); ++j) {
      const double sq = squared_distance(p, target.row(j).data());
      if (sq < best_sq) best_sq = sq;
    }
    field.distances[i] = std::min(d_max, std::sqrt(best_sq));
  }
  return field;
}

InteractionField field_fast(const Points& source, const Points& target,
                            double d_max, Entity source_tag,
                            Entity target_tag) {
  check_field_inputs(source, target, d_max);
  InteractionField field;
  field.source = source_tag;
  field.target = target_tag;
  field.d_max = d_max;
  field.distances.resize(source.rows());
  const PointKdTree tree(target);
  const double bound_sq = d_max * d_max;
  const Eigen::Index n = source.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double best_sq = tree.nearest_squared(source.row(i).data(), bound_sq);
    field.distances[i] = std::min(d_max, std::sqrt(best_sq));
  }
  return field;
}

InteractionField field_bruteforce(const Mesh& source, const Mesh& target,
                                  double d_max, Entity source_tag,
                                  Entity target_tag) {
  return field_bruteforce(source.vertices, target.vertices, d_max, source_tag,
                          target_tag);
}

InteractionField field_fast(const Mesh& source, const Mesh& target,
                            double d_max, Entity source_tag,
                            Entity target_tag) {
  return field_fast(source.vertices, target.vertices, d_max, source_tag,
                    target_tag);
}

std::vector<std::uint8_t> contact_labels(const InteractionField& field,
                                         double threshold) {
  if (!(threshold >= 0.0))
    throw ParameterError("contact threshold must be >= 0");
  std::vector<std::uint8_t> labels(
      static_cast<std::size_t>(field.distances.size()));
  for (Eigen::Index i = 0; i < field.distances.size(); ++i)
    labels[static_cast<std::size_t>(i)] =
        field.distances[i] <= threshold ? 1 : 0;
  return labels;
}

ContactHeatmap aggregate_heatmap(
    const std::vector<std::vector<std::uint8_t>>& label_frames,
    Entity entity) {
  if (label_frames.empty())
    throw ParameterError("heatmap aggregation needs at least one frame");
  const std::size_t n = label_frames.front().size();
  for (const auto& frame : label_frames)
    if (frame.size() != n)
      throw ParameterError("heatmap frames must have equal vertex counts");
  ContactHeatmap map;
  map.entity = entity;
  map.frame_count = static_cast<int>(label_frames.size());
  map.frequencies = VecX::Zero(static_cast<Eigen::Index>(n));
  for (const auto& frame : label_frames)
    for (std::size_t i = 0; i < n; ++i)
      map.frequencies[static_cast<Eigen::Index>(i)] += frame[i];
  map.frequencies /= static_cast<double>(map.frame_count);
  return map;
}

HandObjectFields extract_gt_fields(const Mesh& left_hand,
                                   const Mesh& right_hand, const Mesh& object,
                                   double d_max) {
  HandObjectFields fields;
  fields.left_to_object =
      field_fast(left_hand.vertices, object.vertices, d_max, Entity::LeftHand,
                 Entity::Object);
  fields.right_to_object =
      field_fast(right_hand.vertices, object.vertices, d_max,
                 Entity::RightHand, Entity::Object);
  fields.object_to_left =
      field_fast(object.vertices, left_hand.vertices, d_max, Entity::Object,
                 Entity::LeftHand);
  fields.object_to_right =
      field_fast(object.vertices, right_hand.vertices, d_max, Entity::Object,
                 Entity::RightHand);
  return fields;
}

Mesh merge_object_mesh(const Mesh& base, const Mesh& top) {
  Mesh merged;
  merged.vertices.resize(base.vertices.rows() + top.vertices.rows(), 3);
  merged.vertices.topRows(base.vertices.rows()) = base.vertices;
  merged.vertices.bottomRows(top.vertices.rows()) = top.vertices;
  merged.faces.resize(base.faces.rows() + top.faces.rows(), 3);
  merged.faces.topRows(base.faces.rows()) = base.faces;
  merged.faces.bottomRows(top.faces.rows()) =
      top.faces.array() + static_cast<int>(base.vertices.rows());
  return merged;
}

}  // namespace hoikit
