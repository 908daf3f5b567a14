#include "hoikit/losses.hpp"

#include <cmath>

namespace hoikit {

namespace {

void check_weight(double w, const char* name) {
  if (!(w >= 0.0) || !std::isfinite(w))
    throw ParameterError(std::string("loss weight ") + name +
                         " must be finite and >= 0");
}

template <typename A, typename B>
double mse(const A& pred, const B& gt, const char* what) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ParameterError(std::string(what) + ": shapes differ");
  if (pred.size() == 0) throw ParameterError(std::string(what) + ": empty");
  if (!pred.allFinite() || !gt.allFinite())
    throw ParameterError(std::string(what) + ": non-finite input");
  return (pred - gt).array().square().sum() /
         static_cast<double>(pred.size());
}

}  // namespace

void HandLossWeights::validate() const {
  check_weight(lambda_3d, "lambda_3d");
  check_weight(lambda_2d, "lambda_2d");
  check_weight(lambda_theta, "lambda_theta");
  check_weight(lambda_beta, "lambda_beta");
  check_weight(lambda_cam, "lambda_cam");
}

void ObjectLossWeights::validate() const {
  check_weight(lambda_3d, "lambda_3d");
  check_weight(lambda_2d, "lambda_2d");
  check_weight(lambda_omega, "lambda_omega");
  check_weight(lambda_rot, "lambda_rot");
  check_weight(lambda_cam, "lambda_cam");
}

void LossWeights::validate() const {
  hand.validate();
  object.validate();
}

double LossBreakdown::term(const std::string& name) const {
  const auto it = terms.find(name);
  if (it == terms.end())
    throw ParameterError("no loss term named " + name);
  return it->second;
}

LossBreakdown hand_loss(const HandLossInput& pred, const HandLossInput& gt,
                        const HandLossWeights& weights) {
  weights.validate();
  if (pred.theta.size() != kHandPoseDof || gt.theta.size() != kHandPoseDof)
    throw ParameterError("hand loss: theta must have 48 entries");
  if (pred.beta.size() != kHandShapeDof || gt.beta.size() != kHandShapeDof)
    throw ParameterError("hand loss: beta must have 10 entries");

  LossBreakdown out;
  out.terms["3d"] = mse(pred.joints3d, gt.joints3d, "hand loss 3d");
  out.terms["2d"] = mse(pred.joints2d, gt.joints2d, "hand loss 2d");
  out.terms["theta"] = mse(pred.theta, gt.theta, "hand loss theta");
  out.terms["beta"] = mse(pred.beta, gt.beta, "hand loss beta");
  out.terms["cam"] = mse(pred.cam, gt.cam, "hand loss cam");
  out.total = weights.lambda_3d * out.terms["3d"] +
              weights.lambda_2d * out.terms["2d"] +
              weights.lambda_theta * out.terms["theta"] +
              weights.lambda_beta * out.terms["beta"] +
              weights.lambda_cam * out.terms["cam"];
  return out;
}

LossBreakdown object_loss(const ObjectLossInput& pred,
                          const ObjectLossInput& gt,
                          const ObjectLossWeights& weights) {
  weights.validate();
  if (!std::isfinite(pred.omega) || !std::isfinite(gt.omega))
    throw ParameterError("object loss: non-finite articulation angle");

  LossBreakdown out;
  out.terms["3d"] = mse(pred.landmarks3d, gt.landmarks3d, "object loss 3d");
  out.terms["2d"] = mse(pred.landmarks2d, gt.landmarks2d, "object loss 2d");
  const double domega = pred.omega - gt.omega;
  out.terms["omega"] = domega * domega;
  out.terms["rot"] = mse(pred.rotation, gt.rotation, "object loss rot");
  out.terms["cam"] = mse(pred.cam, gt.cam, "object loss cam");
  out.total = weights.lambda_3d * out.terms["3d"] +
              weights.lambda_2d * out.terms["2d"] +
              weights.lambda_omega * out.terms["omega"] +
              weights.lambda_rot * out.terms["rot"] +
              weights.lambda_cam * out.terms["cam"];
  return out;
}

namespace {

double l1_term(const InteractionField& pred, const InteractionField& gt,
               bool mean_reduction, const char* name) {
  if (pred.distances.size() != gt.distances.size())
    throw ParameterError(std::string("field loss ") + name +
                         ": lengths differ");
  if (pred.distances.size() == 0)
    throw ParameterError(std::string("field loss ") + name + ": empty field");
  const double sum = (pred.distances - gt.distances).array().abs().sum();
  return mean_reduction ? sum / static_cast<double>(pred.distances.size())
                        : sum;
}

}  // namespace

LossBreakdown field_loss(const HandObjectFields& pred,
                         const HandObjectFields& gt, bool mean_reduction) {
  LossBreakdown out;
  out.terms["left_to_object"] = l1_term(pred.left_to_object, gt.left_to_object,
                                        mean_reduction, "left_to_object");
  out.terms["right_to_object"] =
      l1_term(pred.right_to_object, gt.right_to_object, mean_reduction,
              "right_to_object");
  out.terms["object_to_left"] = l1_term(pred.object_to_left, gt.object_to_left,
                                        mean_reduction, "object_to_left");
  out.terms["object_to_right"] =
      l1_term(pred.object_to_right, gt.object_to_right, mean_reduction,
              "object_to_right");
  out.total = out.terms["left_to_object"] + out.terms["right_to_object"] +
              out.terms["object_to_left"] + out.terms["object_to_right"];
  return out;
}

}  // namespace hoikit
