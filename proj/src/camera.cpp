#include "headgs/camera.hpp"

#include "headgs/errors.hpp"

#include <cmath>
#include <numbers>

namespace headgs {

namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace

void CameraRanges::validate() const {
  for (const Range* r : {&distance, &fovy, &elevation, &azimuth})
    if (!(r->lo <= r->hi)) throw ConfigError("camera range has lo > hi");
  if (!(distance.lo > 0)) throw ConfigError("camera distance must be positive");
  if (!(fovy.lo > 0 && fovy.hi < 180)) throw ConfigError("fovy must lie in (0, 180)");
  if (elevation.lo < -89.0 || elevation.hi > 89.0) throw ConfigError("elevation must lie in [-89, 89]");
}

CameraSample sample_camera(std::mt19937_64& rng, const CameraRanges& ranges, const Vec3& look_at, int width,
                           int height) {
  CameraSample s;
  s.distance = draw(rng, ranges.distance);
  s.fovy = draw(rng, ranges.fovy);
  s.elevation = draw(rng, ranges.elevation);
  s.azimuth = draw(rng, ranges.azimuth);
  s.look_at = look_at;
  s.width = width;
  s.height = height;
  return s;
}

Camera Camera::from_sample(const CameraSample& s) {
  const double el = deg2rad(s.elevation), az = deg2rad(s.azimuth);
  const Vec3 eye = s.look_at + s.distance * Vec3(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  const Vec3 forward = (s.look_at - eye).normalized();
  const Vec3 right = forward.cross(Vec3::UnitY()).normalized();
  const Vec3 down = forward.cross(right);

  Camera c;
  c.rotation.row(0) = right.transpose();
  c.rotation.row(1) = down.transpose();
  c.rotation.row(2) = forward.transpose();
  c.translation = -c.rotation * eye;
  c.width = s.width;
  c.height = s.height;
  c.fy = 0.5 * s.height / std::tan(0.5 * deg2rad(s.fovy));
  c.fx = c.fy;
  c.cx = 0.5 * s.width;
  c.cy = 0.5 * s.height;
  return c;
}

}  // namespace headgs
