#pragma once

#include <cstdint>
#include <vector>

#include "hoikit/models.hpp"

namespace hoikit {

/// Default clamp for interaction-field distances, meters.
inline constexpr double kDefaultFieldClamp = 0.100;

/// Default contact-proximity threshold, meters.
inline constexpr double kDefaultContactThreshold = 0.005;

/// Per-source-vertex distance to the closest target vertex, clamped.
struct InteractionField {
  Entity source = Entity::Object;
  Entity target = Entity::Object;
  double d_max = kDefaultFieldClamp;
  VecX distances;  // V_source entries in [0, d_max]

  void validate() const;
};

/// Exact O(V_a * V_b) reference kernel. Serial; the oracle field_fast is
/// checked against.
InteractionField field_bruteforce(const Points& source, const Points& target,
                                  double d_max,
                                  Entity source_tag = Entity::Object,
                                  Entity target_tag = Entity::Object);
InteractionField field_bruteforce(const Mesh& source, const Mesh& target,
                                  double d_max,
                                  Entity source_tag = Entity::Object,
                                  Entity target_tag = Entity::Object);

/// Accelerated kernel: kd-tree over the target, OpenMP over source
/// vertices. Same metric and clamp as field_bruteforce (exact nearest
/// vertex, not an approximation).
InteractionField field_fast(const Points& source, const Points& target,
                            double d_max, Entity source_tag = Entity::Object,
                            Entity target_tag = Entity::Object);
InteractionField field_fast(const Mesh& source, const Mesh& target,
                            double d_max, Entity source_tag = Entity::Object,
                            Entity target_tag = Entity::Object);

/// label_i = (distance_i <= threshold)
std::vector<std::uint8_t> contact_labels(const InteractionField& field,
                                         double threshold);

/// Per-vertex contact frequency over frames.
struct ContactHeatmap {
  Entity entity = Entity::Object;
  VecX frequencies;  // in [0, 1]
  int frame_count = 0;
};

ContactHeatmap aggregate_heatmap(
    const std::vector<std::vector<std::uint8_t>>& label_frames,
    Entity entity = Entity::Object);

/// The four ground-truth fields of a posed scene. Hands measure against the
/// full object (both parts); the object measures against each hand.
struct HandObjectFields {
  InteractionField left_to_object;
  InteractionField right_to_object;
  InteractionField object_to_left;
  InteractionField object_to_right;
};

HandObjectFields extract_gt_fields(const Mesh& left_hand,
                                   const Mesh& right_hand, const Mesh& object,
                                   double d_max = kDefaultFieldClamp);

/// Concatenates the posed parts into one mesh (base vertices first, faces
/// reindexed).
Mesh merge_object_mesh(const Mesh& base, const Mesh& top);

}  // namespace hoikit
