#pragma once

#include "headgs/math.hpp"

#include <random>

namespace headgs {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform sampling ranges; angles in degrees.
struct CameraRanges {
  Range distance{1.5, 2.0};
  Range fovy{40.0, 70.0};
  Range elevation{-30.0, 30.0};
  Range azimuth{-180.0, 180.0};

  void validate() const;
};

/// Orbit camera around a look-at point. Azimuth 0 looks at the face (+z side);
/// positive elevation is above the head.
struct CameraSample {
  double distance = 1.75;
  double fovy = 50.0;
  double elevation = 0.0;
  double azimuth = 0.0;
  Vec3 look_at = Vec3::Zero();
  int width = 256;
  int height = 256;
};

CameraSample sample_camera(std::mt19937_64& rng, const CameraRanges& ranges, const Vec3& look_at, int width,
                           int height);

/// Pinhole camera in the x-right, y-down, z-forward convention. Pixel (px, py)
/// has its center at (px + 0.5, py + 0.5).
struct Camera {
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();   // world -> camera
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double near_plane = 0.2;

  static Camera from_sample(const CameraSample& sample);

  Vec3 to_view(const Vec3& world) const { return rotation * world + translation; }
  Vec3 position() const { return -rotation.transpose() * translation; }
};

}  // namespace headgs
