#include "headgs/avatar.hpp"

#include "headgs/errors.hpp"

namespace headgs {

PosedAvatar pose_avatar(const HeadModel& model, const BoundCloud& cloud, const AnimationInput& anim,
                        const std::vector<TriangleFrame>* previous) {
  AnimationInput in = anim;
  in.shape = cloud.shape;
  PosedAvatar out;
  out.mesh = pose_mesh(model, in);
  out.frames = compute_frames(model, out.mesh.posed_vertices, previous);
  out.world.poses = deform_cloud(cloud, out.frames);
  out.world.colors = cloud.colors;
  out.world.opacities.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.world.opacities[i] = cloud.opacity(i);
  return out;
}

CloudGrads::CloudGrads(std::size_t n, std::size_t n_shape)
    : positions(n, Vec3::Zero()),
      log_scales(n, Vec3::Zero()),
      rotations(n, Vec4::Zero()),
      colors(n, Vec3::Zero()),
      opacity_logits(n, 0.0),
      shape(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_shape))) {}

CloudGrads& CloudGrads::operator+=(const CloudGrads& o) {
  if (o.size() != size() || o.shape.size() != shape.size()) throw DimensionError("gradient sizes differ");
  for (std::size_t i = 0; i < size(); ++i) {
    positions[i] += o.positions[i];
    log_scales[i] += o.log_scales[i];
    rotations[i] += o.rotations[i];
    colors[i] += o.colors[i];
    opacity_logits[i] += o.opacity_logits[i];
  }
  shape += o.shape;
  return *this;
}

CloudGrads& CloudGrads::operator*=(double s) {
  for (std::size_t i = 0; i < size(); ++i) {
    positions[i] *= s;
    log_scales[i] *= s;
    rotations[i] *= s;
    colors[i] *= s;
    opacity_logits[i] *= s;
  }
  shape *= s;
  return *this;
}

CloudGrads avatar_backward(const HeadModel& model, const BoundCloud& cloud, const PosedAvatar& posed,
                           const WorldGaussianGrads& grads, bool with_shape) {
  const std::size_t n = cloud.size();
  if (grads.poses.size() != n) throw DimensionError("world gradients do not match the cloud");
  CloudGrads out(n, model.num_shape());
  std::vector<FrameGrad> frame_grads(with_shape ? model.num_faces() : 0);
  FrameGrad scratch;
  for (std::size_t i = 0; i < n; ++i) {
    const LocalPose local = cloud.local_pose(i);
    const std::uint32_t f = cloud.bindings[i];
    FrameGrad& fg = with_shape ? frame_grads[f] : scratch;
    const LocalPoseGrad g = deform_backward(grads.poses[i], local, posed.frames[f], fg);
    out.positions[i] = g.position;
    out.log_scales[i] = g.scale.cwiseProduct(local.scale);
    out.rotations[i] = g.rotation;
    out.colors[i] = grads.colors[i];
    const double a = cloud.opacity(i);
    out.opacity_logits[i] = grads.opacities[i] * a * (1.0 - a);
  }
  if (!with_shape) return out;

  const auto& v = posed.mesh.posed_vertices;
  RowMatrixX3d grad_vertices = RowMatrixX3d::Zero(v.rows(), 3);
  for (std::size_t f = 0; f < model.num_faces(); ++f) {
    const FrameGrad& fg = frame_grads[f];
    if (fg.center.isZero(0.0) && fg.rotation.isZero(0.0) && fg.area == 0.0) continue;
    const Face& face = model.faces[f];
    const Vec3 a = v.row(face[0]).transpose(), b = v.row(face[1]).transpose(), c = v.row(face[2]).transpose();
    // Faces that kept a previous frame have no dependence on the vertices.
    if (0.5 * (b - a).cross(c - a).norm() <= kDegenerateArea) continue;
    const auto gv = triangle_frame_backward(fg, a, b, c);
    for (int k = 0; k < 3; ++k) grad_vertices.row(face[k]) += gv[k].transpose();
  }
  out.shape = pose_mesh_backward_shape(model, posed.mesh, grad_vertices);
  return out;
}

}  // namespace headgs
