#pragma once

#include "headgs/head_model.hpp"
#include "headgs/math.hpp"

#include <optional>
#include <span>
#include <vector>

namespace headgs {

/// Local coordinate system of a mesh triangle.
struct TriangleFrame {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();  // columns: edge, normal, edge x normal
  double area = 1.0;
  double size = 1.0;  // tau
};

/// How the triangle size tau is measured.
enum class TauMode {
  CenterToVertex,  // max |v_i - t|
  MaxPairwise,     // max pairwise distance over {t, v0, v1, v2}
};

inline constexpr double kDegenerateArea = 1e-12;

/// Frame of the triangle (v0, v1, v2). Throws DegenerateTriangleError when the
/// area is at most `min_area`.
TriangleFrame triangle_frame(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                             TauMode tau_mode = TauMode::CenterToVertex, double min_area = kDegenerateArea);

/// Frames of every face of a posed mesh. When `previous` is given, degenerate
/// faces reuse their previous frame; otherwise a degenerate face is an error.
std::vector<TriangleFrame> compute_frames(const HeadModel& model, const RowMatrixX3d& vertices,
                                          const std::vector<TriangleFrame>* previous = nullptr,
                                          TauMode tau_mode = TauMode::CenterToVertex);

/// Gaussian parameters in a triangle's local frame. `scale` is activated
/// (positive); `rotation` is a (w, x, y, z) quaternion, normalized on use.
struct LocalPose {
  Vec3 position = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Vec4 rotation = identity_quaternion();
};

struct WorldPose {
  Vec3 position = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();
};

/// R' = R~ R,  mu' = sqrt(a) R~ mu + t,  s' = sqrt(a) s.
WorldPose deform_gaussian(const LocalPose& local, const TriangleFrame& frame);

struct LocalPoseFields {
  Vec3 position;
  Vec3 scale;
  Mat3 rotation;
};

/// Inverse of deform_gaussian. Throws when the frame area is not positive.
LocalPoseFields invert_deform(const WorldPose& world, const TriangleFrame& frame);

struct WorldPoseGrad {
  Vec3 position = Vec3::Zero();
  Vec3 scale = Vec3::Zero();
  Mat3 rotation = Mat3::Zero();
};

struct LocalPoseGrad {
  Vec3 position = Vec3::Zero();
  Vec3 scale = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();
};

struct FrameGrad {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Zero();
  double area = 0.0;
};

/// Back-propagates world-space gradients through the deformation to the local
/// parameters, and accumulates into `frame_grad` the gradients with respect to
/// the frame quantities.
LocalPoseGrad deform_backward(const WorldPoseGrad& grad, const LocalPose& local, const TriangleFrame& frame,
                              FrameGrad& frame_grad);

/// Chains frame gradients to the triangle's vertices (tau is not
/// differentiated; it only enters regularization).
std::array<Vec3, 3> triangle_frame_backward(const FrameGrad& grad, const Vec3& v0, const Vec3& v1, const Vec3& v2);

}  // namespace headgs
