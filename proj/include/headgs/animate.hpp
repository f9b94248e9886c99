#pragma once

#include "headgs/animation.hpp"
#include "headgs/camera.hpp"
#include "headgs/gaussians.hpp"
#include "headgs/head_model.hpp"
#include "headgs/image.hpp"

#include <filesystem>
#include <optional>

namespace headgs {

enum class CameraPathKind { Fixed, Orbit };

struct CameraPath {
  CameraPathKind kind = CameraPathKind::Fixed;
  CameraSample base;
  double degrees_per_second = 30.0;  // orbit only

  /// Camera at time `seconds`; an orbit advances the azimuth.
  CameraSample at(double seconds) const;
};

struct AnimateOptions {
  CameraPath path;
  Vec3 background = Vec3::Ones();
  bool landmark_maps = false;  // also write landmark_%05d.png
};

/// Throws AssetError when the cloud was fitted to a different model.
void check_model_hash(const HeadModel& model, const BoundCloud& cloud);

/// Renders one frame with no dependence on any other frame. Faces that
/// degenerate fall back to their frame in the standard pose.
Image animate_frame(const HeadModel& model, const BoundCloud& cloud, const AnimationSequence& sequence,
                    std::size_t index, const AnimateOptions& options);

/// Writes frame_%05d.png for every frame and returns the frame count. When
/// `video` is set and an ffmpeg executable is found, also encodes an MP4.
std::size_t animate(const HeadModel& model, const BoundCloud& cloud, const AnimationSequence& sequence,
                    const AnimateOptions& options, const std::filesystem::path& out_dir,
                    const std::optional<std::filesystem::path>& video = std::nullopt);

}  // namespace headgs
