#include "headgs/landmark_map.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace headgs {

namespace {

std::optional<Vec2> project_point(const Camera& cam, const Vec3& world) {
  const Vec3 v = cam.to_view(world);
  if (v.z() < cam.near_plane) return std::nullopt;
  return Vec2(cam.fx * v.x() / v.z() + cam.cx, cam.fy * v.y() / v.z() + cam.cy);
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

void draw_segment(Image& img, const Vec2& a, const Vec2& b, const Vec3& color, double width) {
  const double half = 0.5 * width;
  const double reach = half + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - reach)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - reach)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + reach)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = segment_distance(Vec2(x + 0.5, y + 0.5), a, b);
      const double coverage = std::clamp(half + 0.5 - d, 0.0, 1.0);
      if (coverage <= 0.0) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = img.at(x, y, c) * (1.0 - coverage) + color[c] * coverage;
    }
}

}  // namespace

std::map<std::string, Vec3> LandmarkStyle::default_palette() {
  return {
      {"upper_lips", Vec3(1.0, 0.0, 0.0)},        {"lower_lips", Vec3(0.0, 1.0, 0.0)},
      {"eye_boundary_left", Vec3(0.0, 0.0, 1.0)}, {"eye_boundary_right", Vec3(1.0, 1.0, 0.0)},
      {"eyeball_left", Vec3(0.0, 1.0, 1.0)},      {"eyeball_right", Vec3(1.0, 0.0, 1.0)},
      {"face_boundary", Vec3(1.0, 1.0, 1.0)},
  };
}

std::map<std::string, std::vector<Vec2>> project_landmarks(const LandmarkSet& landmarks, const Camera& camera) {
  std::map<std::string, std::vector<Vec2>> out;
  for (const auto& [name, pts] : landmarks) {
    auto& dst = out[name];
    for (const auto& p : pts)
      if (auto q = project_point(camera, p)) dst.push_back(*q);
  }
  return out;
}

Image render_landmark_map(const HeadModel& model, const MeshState& state, const Camera& camera,
                          const LandmarkStyle& style) {
  Image img(camera.width, camera.height, 3, 0.0);
  const auto landmarks = landmark_positions(model, state);
  for (const auto& name : kLandmarkGroupNames) {
    const auto it = landmarks.find(name);
    if (it == landmarks.end() || it->second.size() < 2) continue;
    const auto color_it = style.palette.find(name);
    const Vec3 color = color_it != style.palette.end() ? color_it->second : Vec3::Ones();
    const auto& pts = it->second;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      // Segments with an endpoint behind the near plane are dropped.
      const auto a = project_point(camera, pts[k]);
      const auto b = project_point(camera, pts[(k + 1) % pts.size()]);
      if (a && b) draw_segment(img, *a, *b, color, style.line_width);
    }
  }
  return img;
}

}  // namespace headgs
