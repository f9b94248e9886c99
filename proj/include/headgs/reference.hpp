#pragma once

#include "headgs/camera.hpp"
#include "headgs/config.hpp"
#include "headgs/gaussians.hpp"
#include "headgs/head_model.hpp"
#include "headgs/image.hpp"

#include <vector>

namespace headgs {

/// One (camera, animation) pair and its rendered image.
struct TargetView {
  CameraSample camera;
  AnimationInput anim;
  Image image;
};

struct PhotometricTargets {
  Eigen::VectorXd reference_shape;
  std::vector<TargetView> training;
  std::vector<TargetView> held_out;

  std::vector<Image> training_images() const;
};

/// Hand-authored textured head bound to `model`: skin, hair, lips and eyes
/// painted by region, fine stripes for texture detail, a seeded nonzero
/// shape vector with entries of magnitude 0.5 to 1, and nearly opaque points.
BoundCloud make_reference_cloud(const HeadModel& model, std::uint64_t seed);

/// Training views spread around the head and held-out views in between,
/// each with its own pose and expression.
PhotometricTargets make_photometric_targets(const HeadModel& model, const BoundCloud& reference,
                                            const PhotometricSetup& setup, int resolution, const Vec3& background);

/// Renders `cloud` for one camera and animation frame.
Image render_view(const HeadModel& model, const BoundCloud& cloud, const CameraSample& camera, const AnimationInput& anim,
                  const Vec3& background);

/// Mean PSNR of `cloud` over the given views.
double mean_psnr(const HeadModel& model, const BoundCloud& cloud, const std::vector<TargetView>& views,
                 const Vec3& background);

}  // namespace headgs
