#pragma once

#include <map>
#include <string>

#include "hoikit/fields.hpp"
#include "hoikit/models.hpp"

namespace hoikit {

/// Steering weights. Defaults are all 1; real values are tuned by whatever
/// trainer consumes these reference losses.
struct HandLossWeights {
  double lambda_3d = 1.0;
  double lambda_2d = 1.0;
  double lambda_theta = 1.0;
  double lambda_beta = 1.0;
  double lambda_cam = 1.0;

  void validate() const;
};

struct ObjectLossWeights {
  double lambda_3d = 1.0;
  double lambda_2d = 1.0;
  double lambda_omega = 1.0;
  double lambda_rot = 1.0;
  double lambda_cam = 1.0;

  void validate() const;
};

struct LossWeights {
  HandLossWeights hand;
  ObjectLossWeights object;

  void validate() const;
};

/// total = sum of lambda_k * terms[k]; terms hold the unweighted values so
/// tests can check each criterion separately.
struct LossBreakdown {
  double total = 0.0;
  std::map<std::string, double> terms;

  double term(const std::string& name) const;
};

/// One hand's supervised quantities. joints3d are root-relative (row 0 at
/// the origin is the caller's responsibility); cam packs the
/// weak-perspective triplet (s, t_x, t_y).
struct HandLossInput {
  Points joints3d;  // 21 x 3, meters, root-relative
  Pixels joints2d;  // 21 x 2, pixels
  VecX theta;       // 48
  VecX beta;        // 10
  Vec3 cam;         // (s, t_x, t_y)
};

struct ObjectLossInput {
  Points landmarks3d;  // K x 3, meters
  Pixels landmarks2d;  // K x 2, pixels
  double omega = 0.0;  // radians
  Vec3 rotation;       // axis-angle
  Vec3 cam;            // (s, t_x, t_y)
};

/// Every term is the mean squared error over its elements.
/// Terms: "3d", "2d", "theta", "beta", "cam".
LossBreakdown hand_loss(const HandLossInput& pred, const HandLossInput& gt,
                        const HandLossWeights& weights = {});

/// Terms: "3d", "2d", "omega", "rot", "cam".
LossBreakdown object_loss(const ObjectLossInput& pred,
                          const ObjectLossInput& gt,
                          const ObjectLossWeights& weights = {});

/// L1 loss over the four interaction fields. By default each term is the
/// plain sum of absolute differences; mean_reduction divides each term by
/// its vertex count. Terms keyed like the field names in HandObjectFields.
LossBreakdown field_loss(const HandObjectFields& pred,
                         const HandObjectFields& gt,
                         bool mean_reduction = false);

}  // namespace hoikit
