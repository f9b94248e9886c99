#pragma once

#include "headgs/camera.hpp"
#include "headgs/head_model.hpp"
#include "headgs/image.hpp"

#include <map>
#include <string>

namespace headgs {

/// Fixed RGB color per landmark group.
struct LandmarkStyle {
  std::map<std::string, Vec3> palette = default_palette();
  double line_width = 2.0;

  static std::map<std::string, Vec3> default_palette();
};

/// Closed anti-aliased polylines of every landmark group on black.
Image render_landmark_map(const HeadModel& model, const MeshState& state, const Camera& camera,
                          const LandmarkStyle& style = {});

/// Projected 2D landmark points per group (pixels); points behind the near
/// plane are omitted.
std::map<std::string, std::vector<Vec2>> project_landmarks(const LandmarkSet& landmarks, const Camera& camera);

}  // namespace headgs
