// Seeded scene generators shared by the unit and acceptance tests.
#pragma once

#include "headgs/renderer.hpp"
#include "oracles.hpp"

#include <random>

namespace scenes {

using namespace headgs;

inline Camera front_camera(int size, double distance = 2.5) {
  CameraSample s;
  s.distance = distance;
  s.width = size;
  s.height = size;
  return Camera::from_sample(s);
}

/// Random Gaussians scattered in front of a frontal camera.
inline WorldGaussians random_cloud(std::mt19937_64& rng, int n, double extent = 0.6, double min_scale = 0.01,
                                   double max_scale = 0.15) {
  std::uniform_real_distribution<double> u(-extent, extent), s(min_scale, max_scale), c(0.0, 1.0), o(0.05, 0.95);
  WorldGaussians g;
  for (int i = 0; i < n; ++i) {
    WorldPose p;
    p.position = Vec3(u(rng), u(rng), u(rng));
    p.scale = Vec3(s(rng), s(rng), s(rng));
    p.rotation = oracle::random_rotation(rng);
    g.poses.push_back(p);
    g.colors.emplace_back(c(rng), c(rng), c(rng));
    g.opacities.push_back(o(rng));
  }
  return g;
}

/// Five broad Gaussians whose truncated footprints cover a whole 16 x 16
/// image and whose combined opacity never exhausts the transmittance, so the
/// image is a smooth function of every parameter.
inline WorldGaussians smooth_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(-0.05, 0.05), s(0.9, 1.4), c(0.0, 1.0), o(0.05, 0.8);
  WorldGaussians g;
  for (int i = 0; i < 5; ++i) {
    WorldPose p;
    p.position = Vec3(xy(rng), xy(rng), -0.4 + 0.2 * i + 0.5 * xy(rng));
    p.scale = Vec3(s(rng), s(rng), s(rng));
    p.rotation = oracle::random_rotation(rng);
    g.poses.push_back(p);
    g.colors.emplace_back(c(rng), c(rng), c(rng));
    g.opacities.push_back(o(rng));
  }
  return g;
}

}  // namespace scenes
