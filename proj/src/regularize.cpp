#include "headgs/regularize.hpp"

#include "headgs/errors.hpp"

#include <cmath>

namespace headgs {

void RegConfig::validate() const {
  if (!(lambda_pos > 0) || !(lambda_scale > 0) || !(tol_pos_factor > 0) || !(tol_scale_factor > 0))
    throw ConfigError("regularization weights and tolerance factors must be positive");
}

PenaltyValue position_penalty(const Vec3& mu, double area, double tolerance) {
  const double sa = std::sqrt(area);
  const double dist = sa * mu.norm();
  if (dist < tolerance) return {tolerance, Vec3::Zero()};
  return {dist, sa * mu / mu.norm()};
}

PenaltyValue scaling_penalty(const Vec3& s, double area, double tolerance) {
  const double sa = std::sqrt(area);
  Vec3 m;
  for (int k = 0; k < 3; ++k) m[k] = std::max(sa * s[k], tolerance);
  const double norm = m.norm();
  PenaltyValue out{norm, Vec3::Zero()};
  for (int k = 0; k < 3; ++k)
    if (sa * s[k] > tolerance) out.grad[k] = sa * m[k] / norm;
  return out;
}

RegLoss reg_loss(const BoundCloud& cloud, const std::vector<TriangleFrame>& frames, const RegConfig& cfg) {
  const std::size_t n = cloud.size();
  RegLoss out;
  out.grad_position.assign(n, Vec3::Zero());
  out.grad_log_scale.assign(n, Vec3::Zero());
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = cloud.bindings[i];
    if (b >= frames.size()) throw DimensionError("point bound to a face without a frame");
    const auto& f = frames[b];
    const double inv_sa = 1.0 / std::sqrt(f.area);
    const Vec3 s = cloud.log_scales[i].array().exp().matrix();
    const auto pos = position_penalty(cloud.positions[i], f.area, cfg.tol_pos_factor * f.size);
    const auto scl = scaling_penalty(s, f.area, cfg.tol_scale_factor * f.size);
    total += (cfg.lambda_pos * pos.value + cfg.lambda_scale * scl.value) * inv_sa;
    const double w = inv_sa * inv_n;
    out.grad_position[i] = w * cfg.lambda_pos * pos.grad;
    out.grad_log_scale[i] = w * cfg.lambda_scale * scl.grad.cwiseProduct(s);
  }
  out.value = total * inv_n;
  return out;
}

}  // namespace headgs
