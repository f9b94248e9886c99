#pragma once

#include "headgs/binding.hpp"
#include "headgs/camera.hpp"
#include "headgs/image.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace headgs {

/// Deformed Gaussians ready for rendering. Opacities are activated.
struct WorldGaussians {
  std::vector<WorldPose> poses;
  std::vector<Vec3> colors;
  std::vector<double> opacities;

  std::size_t size() const { return poses.size(); }
};

struct ScreenGaussian {
  Vec2 mean = Vec2::Zero();  // pixels
  Mat2 cov = Mat2::Identity();
  Mat2 conic = Mat2::Identity();  // inverse of cov
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  int radius = 0;  // conservative 3-sigma footprint, pixels
};

/// Visible Gaussians after culling; `source[i]` is the input index of entry i.
struct ProjectedSet {
  std::vector<ScreenGaussian> gaussians;
  std::vector<std::uint32_t> source;
};

inline constexpr double kCovarianceFloor = 0.3;
inline constexpr double kFootprintSigmas = 3.0;
/// Kernel support: G is exactly zero where the exponent falls below this
/// (beyond the 3-sigma ellipse).
inline constexpr double kKernelCutoffPower = -0.5 * kFootprintSigmas * kFootprintSigmas;
/// A pixel stops compositing right after its transmittance drops below this.
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr int kTileSize = 16;

/// Truncated Gaussian kernel exponent for pixel-center offset d = pixel - mean.
inline double kernel_power(const Mat2& conic, double dx, double dy) {
  return -0.5 * (conic(0, 0) * dx * dx + 2.0 * conic(0, 1) * dx * dy + conic(1, 1) * dy * dy);
}

ProjectedSet project(const WorldGaussians& gaussians, const Camera& camera);

struct RenderSettings {
  Vec3 background = Vec3::Zero();
};

struct RenderOutput {
  Image color;  // H x W x 3
  Image alpha;  // H x W x 1, 1 - final transmittance

  // Saved intermediates for the backward pass.
  ProjectedSet projected;
  std::vector<std::uint32_t> sorted;                   // projected indices, front to back
  std::vector<std::vector<std::uint32_t>> tile_lists;  // per tile, front to back
  std::vector<std::uint32_t> n_contrib;                // per pixel, list entries consumed
  Vec3 background = Vec3::Zero();
  std::uint64_t fingerprint = 0;
  int tiles_x = 0, tiles_y = 0;
};

/// Tile-based front-to-back alpha compositing of projected Gaussians.
RenderOutput rasterize(const ProjectedSet& projected, int width, int height, const RenderSettings& settings = {});

/// project + rasterize, recording a fingerprint of the inputs.
RenderOutput render(const WorldGaussians& gaussians, const Camera& camera, const RenderSettings& settings = {});

/// Gradients with respect to projected quantities, indexed like `projected`.
/// `conic` holds the full symmetric-matrix gradient.
struct ScreenGrads {
  std::vector<Vec2> mean;
  std::vector<Mat2> conic;
  std::vector<Vec3> color;
  std::vector<double> opacity;
};

ScreenGrads rasterize_backward(const RenderOutput& forward, const Image& grad_color);

struct WorldGaussianGrads {
  std::vector<WorldPoseGrad> poses;
  std::vector<Vec3> colors;
  std::vector<double> opacities;  // w.r.t. activated opacity
  /// |dL/d mean2d| per input Gaussian, or -1 when culled.
  std::vector<double> mean2d_norm;
};

/// Full backward pass: rasterizer then projection Jacobians. Throws
/// StaleIntermediatesError when `gaussians`/`camera` differ from the forward.
WorldGaussianGrads render_backward(const WorldGaussians& gaussians, const Camera& camera, const RenderOutput& forward,
                                   const Image& grad_color);

std::uint64_t render_fingerprint(const WorldGaussians& gaussians, const Camera& camera, const Vec3& background);

}  // namespace headgs
