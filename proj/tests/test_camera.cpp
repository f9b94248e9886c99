#include "headgs/camera.hpp"
#include "headgs/errors.hpp"
#include "headgs/image.hpp"
#include "headgs/landmark_map.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace headgs;

TEST_CASE("camera samples are uniform within their ranges") {
  std::mt19937_64 rng(17);
  const CameraRanges r;
  const int n = 10000;
  double lo[4] = {1e9, 1e9, 1e9, 1e9}, hi[4] = {-1e9, -1e9, -1e9, -1e9}, sum[4] = {0, 0, 0, 0};
  const Range* ranges[4] = {&r.distance, &r.fovy, &r.elevation, &r.azimuth};
  for (int i = 0; i < n; ++i) {
    const auto s = sample_camera(rng, r, Vec3::Zero(), 64, 64);
    const double v[4] = {s.distance, s.fovy, s.elevation, s.azimuth};
    for (int k = 0; k < 4; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
      sum[k] += v[k];
    }
  }
  for (int k = 0; k < 4; ++k) {
    const double width = ranges[k]->hi - ranges[k]->lo;
    CHECK(lo[k] >= ranges[k]->lo);
    CHECK(hi[k] <= ranges[k]->hi);
    // Standard error of the mean of a uniform variable: width / sqrt(12 n).
    const double se = width / std::sqrt(12.0 * n);
    CHECK(std::abs(sum[k] / n - 0.5 * (ranges[k]->lo + ranges[k]->hi)) < 3.0 * se);
  }
}

TEST_CASE("camera sampling is seeded and handles degenerate ranges") {
  std::mt19937_64 a(5), b(5);
  CameraRanges r;
  for (int i = 0; i < 10; ++i) {
    const auto sa = sample_camera(a, r, Vec3::Zero(), 8, 8), sb = sample_camera(b, r, Vec3::Zero(), 8, 8);
    CHECK(sa.azimuth == sb.azimuth);
    CHECK(sa.distance == sb.distance);
  }
  r.distance = {1.7, 1.7};
  for (int i = 0; i < 10; ++i) CHECK(sample_camera(a, r, Vec3::Zero(), 8, 8).distance == 1.7);
  r.distance = {2.0, 1.0};
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("camera geometry") {
  CameraSample s;
  s.distance = 2.0;
  s.fovy = 60.0;
  s.width = 100;
  s.height = 80;
  const auto cam = Camera::from_sample(s);
  CHECK((cam.position() - Vec3(0, 0, 2)).norm() < 1e-12);
  CHECK((cam.rotation * cam.rotation.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(cam.rotation.determinant() == doctest::Approx(1.0));
  CHECK(cam.fy == doctest::Approx(40.0 / std::tan(M_PI / 6.0)));
  // Look-at point lands on the principal point; +y world is up in the image.
  const Vec3 v = cam.to_view(Vec3::Zero());
  CHECK(v.z() == doctest::Approx(2.0));
  CHECK(std::abs(v.x()) < 1e-12);
  CHECK(cam.to_view(Vec3(0, 1, 0)).y() < 0.0);
  // The subject's left (+x) appears on the image right when seen from the front.
  CHECK(cam.to_view(Vec3(1, 0, 0)).x() > 0.0);
  s.elevation = 30.0;
  CHECK(Camera::from_sample(s).position().y() > 0.0);
}

TEST_CASE("png and raw image io") {
  Image img(5, 3, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i % 11) / 10.0;
  const auto back = decode_png(encode_png(img));
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);
  CHECK(encode_png(back) == encode_png(img));
  CHECK(psnr(img, img) == std::numeric_limits<double>::infinity());
  Image other = img;
  other.data[0] += 0.1;
  CHECK(psnr(img, other) == doctest::Approx(10.0 * std::log10(img.data.size() / 0.01)));
}

namespace {

const HeadModel& toy() {
  static const HeadModel m = generate_toy_model();
  return m;
}

Camera front(int size) {
  CameraSample s;
  s.width = size;
  s.height = size;
  s.distance = 1.6;
  return Camera::from_sample(s);
}

}  // namespace

TEST_CASE("landmark map") {
  const auto& m = toy();
  const auto rest = pose_mesh(m, AnimationInput::neutral(m));
  const auto cam = front(128);
  const auto a = render_landmark_map(m, rest, cam);
  const auto b = render_landmark_map(m, rest, cam);
  CHECK(a.data == b.data);
  double lit = 0.0;
  for (double v : a.data) lit += v;
  CHECK(lit > 0.0);

  // Everything behind the camera.
  CameraSample away;
  away.width = away.height = 64;
  away.look_at = Vec3(0, 0, 10);
  away.distance = 1.0;
  away.azimuth = 180.0;  // eye at z = 9 looking toward +z, away from the head
  const auto black = render_landmark_map(m, rest, Camera::from_sample(away));
  for (double v : black.data) CHECK(v == 0.0);
}

TEST_CASE("jaw opening changes lip pixels but not eye pixels") {
  const auto& m = toy();
  const auto cam = front(128);
  AnimationInput open = AnimationInput::neutral(m);
  open.pose[3 * kToyJawJoint] = 0.3;
  // Render each group alone so pixels can be attributed to a group.
  auto group_map = [&](const AnimationInput& in, const std::string& keep) {
    LandmarkStyle style;
    for (auto& [name, color] : style.palette)
      if (name != keep) color = Vec3::Zero();
    return render_landmark_map(m, pose_mesh(m, in), cam, style);
  };
  const auto neutral = AnimationInput::neutral(m);
  CHECK(group_map(neutral, "lower_lips").data != group_map(open, "lower_lips").data);
  for (const char* eye : {"eye_boundary_left", "eye_boundary_right", "eyeball_left", "eyeball_right"})
    CHECK(group_map(neutral, eye).data == group_map(open, eye).data);
}
