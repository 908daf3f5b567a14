#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace hoikit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// N x 3 point set, one point per row, meters.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// N x 2 pixel coordinates, one point per row.
using Pixels = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
/// F x 3 triangle indices.
using Triangles = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

/// Caller passed arguments with wrong dimensions or invalid values.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input geometry does not determine a unique solution (collinear points,
/// markers on the hinge line, near-identity calibration rotations, ...).
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data files (schema, missing arrays, bad mesh).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Predictions do not cover the frames required by an evaluation split.
struct CoverageError : DataError {
  using DataError::DataError;
};

/// Entities a marker or a field endpoint can refer to.
enum class Entity { LeftHand, RightHand, Object, ObjectBase, ObjectTop };

std::string to_string(Entity e);
Entity entity_from_string(const std::string& s);

}  // namespace hoikit
