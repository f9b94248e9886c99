#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace headgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Quaternions are stored as (w, x, y, z) in a Vec4.
inline Vec4 identity_quaternion() { return Vec4(1.0, 0.0, 0.0, 0.0); }

/// Rotation matrix of the normalized quaternion q = (w, x, y, z).
Mat3 quaternion_to_matrix(const Vec4& q);

/// Back-propagates dL/dR through R = quaternion_to_matrix(q), including the
/// normalization of q.
Vec4 quaternion_to_matrix_backward(const Vec4& q, const Mat3& grad_rot);

/// Rodrigues' formula for an axis-angle vector (angle = norm).
Mat3 axis_angle_to_matrix(const Vec3& axis_angle);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Rounds to the nearest IEEE binary32 value (the on-disk precision).
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace headgs
