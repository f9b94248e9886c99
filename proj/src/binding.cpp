#include "headgs/binding.hpp"

#include "headgs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace headgs {

namespace {

Vec3 normalize_backward(const Vec3& x, const Vec3& grad_unit) {
  const double n = x.norm();
  const Vec3 u = x / n;
  return (grad_unit - u * u.dot(grad_unit)) / n;
}

}  // namespace

TriangleFrame triangle_frame(const Vec3& v0, const Vec3& v1, const Vec3& v2, TauMode tau_mode, double min_area) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 c = e1.cross(e2);
  const double area = 0.5 * c.norm();
  if (!(area > min_area) || e1.norm() == 0.0)
    throw DegenerateTriangleError("degenerate triangle (area " + std::to_string(area) + ")");

  TriangleFrame f;
  f.center = (v0 + v1 + v2) / 3.0;
  f.area = area;
  const Vec3 edge = e1.normalized();
  const Vec3 normal = c / c.norm();
  f.rotation.col(0) = edge;
  f.rotation.col(1) = normal;
  f.rotation.col(2) = edge.cross(normal);

  const std::array<Vec3, 4> pts = {f.center, v0, v1, v2};
  double tau = 0.0;
  if (tau_mode == TauMode::CenterToVertex) {
    for (int k = 1; k < 4; ++k) tau = std::max(tau, (pts[static_cast<std::size_t>(k)] - f.center).norm());
  } else {
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) tau = std::max(tau, (pts[i] - pts[j]).norm());
  }
  f.size = tau;
  return f;
}

std::vector<TriangleFrame> compute_frames(const HeadModel& model, const RowMatrixX3d& vertices,
                                          const std::vector<TriangleFrame>* previous, TauMode tau_mode) {
  const auto& faces = model.faces;
  if (previous && previous->size() != faces.size()) throw DimensionError("previous frame count differs from faces");
  std::vector<TriangleFrame> frames(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    try {
      frames[f] = triangle_frame(vertices.row(face[0]).transpose(), vertices.row(face[1]).transpose(),
                                 vertices.row(face[2]).transpose(), tau_mode);
    } catch (const DegenerateTriangleError&) {
      if (!previous)
        throw DegenerateTriangleError("face " + std::to_string(f) + " is degenerate", static_cast<long>(f));
      frames[f] = (*previous)[f];
    }
  }
  return frames;
}

WorldPose deform_gaussian(const LocalPose& local, const TriangleFrame& frame) {
  const double sa = std::sqrt(frame.area);
  WorldPose w;
  w.rotation = frame.rotation * quaternion_to_matrix(local.rotation);
  w.position = sa * (frame.rotation * local.position) + frame.center;
  w.scale = sa * local.scale;
  return w;
}

LocalPoseFields invert_deform(const WorldPose& world, const TriangleFrame& frame) {
  if (!(frame.area > 0.0)) throw DegenerateTriangleError("cannot invert deformation for non-positive area");
  const double sa = std::sqrt(frame.area);
  LocalPoseFields l;
  l.position = frame.rotation.transpose() * (world.position - frame.center) / sa;
  l.scale = world.scale / sa;
  l.rotation = frame.rotation.transpose() * world.rotation;
  return l;
}

LocalPoseGrad deform_backward(const WorldPoseGrad& g, const LocalPose& local, const TriangleFrame& frame,
                              FrameGrad& fg) {
  const double sa = std::sqrt(frame.area);
  const Mat3& Rt = frame.rotation;
  const Mat3 R = quaternion_to_matrix(local.rotation);

  LocalPoseGrad out;
  out.position = sa * (Rt.transpose() * g.position);
  out.scale = sa * g.scale;
  out.rotation = quaternion_to_matrix_backward(local.rotation, Rt.transpose() * g.rotation);

  fg.center += g.position;
  fg.rotation += sa * g.position * local.position.transpose() + g.rotation * R.transpose();
  fg.area += (g.position.dot(Rt * local.position) + g.scale.dot(local.scale)) / (2.0 * sa);
  return out;
}

std::array<Vec3, 3> triangle_frame_backward(const FrameGrad& g, const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 c = e1.cross(e2);
  const Vec3 edge = e1.normalized();
  const Vec3 normal = c.normalized();

  Vec3 g_edge = g.rotation.col(0);
  Vec3 g_normal = g.rotation.col(1);
  const Vec3 g_binormal = g.rotation.col(2);
  g_edge += normal.cross(g_binormal);
  g_normal += g_binormal.cross(edge);

  Vec3 g_c = normalize_backward(c, g_normal) + g.area * 0.5 * c / c.norm();
  Vec3 g_e1 = normalize_backward(e1, g_edge) + e2.cross(g_c);
  Vec3 g_e2 = g_c.cross(e1);

  const Vec3 g_t = g.center / 3.0;
  return {g_t - g_e1 - g_e2, g_t + g_e1, g_t + g_e2};
}

}  // namespace headgs
