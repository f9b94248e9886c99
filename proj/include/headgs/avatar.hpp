#pragma once

#include "headgs/gaussians.hpp"
#include "headgs/head_model.hpp"
#include "headgs/renderer.hpp"

#include <vector>

namespace headgs {

/// A bound cloud carried onto one posed mesh.
struct PosedAvatar {
  MeshState mesh;
  std::vector<TriangleFrame> frames;
  WorldGaussians world;
};

/// Poses the mesh with the cloud's shape coefficients and the given pose and
/// expression (any shape in `anim` is ignored), then deforms every Gaussian.
PosedAvatar pose_avatar(const HeadModel& model, const BoundCloud& cloud, const AnimationInput& anim,
                        const std::vector<TriangleFrame>* previous = nullptr);

/// Gradients with respect to the stored cloud parameters.
struct CloudGrads {
  std::vector<Vec3> positions;
  std::vector<Vec3> log_scales;
  std::vector<Vec4> rotations;
  std::vector<Vec3> colors;
  std::vector<double> opacity_logits;
  Eigen::VectorXd shape;

  CloudGrads() = default;
  CloudGrads(std::size_t n, std::size_t n_shape);
  std::size_t size() const { return positions.size(); }
  CloudGrads& operator+=(const CloudGrads& o);
  CloudGrads& operator*=(double s);
};

/// Chains world-space Gaussian gradients through the deformation to the cloud
/// parameters and, when `with_shape`, through the triangle frames and the mesh
/// to the shape coefficients.
CloudGrads avatar_backward(const HeadModel& model, const BoundCloud& cloud, const PosedAvatar& posed,
                           const WorldGaussianGrads& grads, bool with_shape);

}  // namespace headgs
