#pragma once

#include "headgs/binding.hpp"
#include "headgs/gaussians.hpp"

#include <vector>

namespace headgs {

/// Weights and tolerances of the adaptive geometry regularizer.
struct RegConfig {
  double lambda_pos = 0.1;
  double lambda_scale = 0.1;
  double tol_pos_factor = 0.5;
  double tol_scale_factor = 0.5;

  void validate() const;
};

struct PenaltyValue {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
};

/// max(sqrt(a) |mu|, tol): rotation-free since |R' mu| = |mu|. The gradient is
/// taken with respect to the local position.
PenaltyValue position_penalty(const Vec3& local_position, double area, double tolerance);

/// |max(sqrt(a) s, tol)| with a componentwise clamp; gradient with respect to
/// the activated scale.
PenaltyValue scaling_penalty(const Vec3& scale, double area, double tolerance);

struct RegLoss {
  double value = 0.0;
  std::vector<Vec3> grad_position;   // d/d local position
  std::vector<Vec3> grad_log_scale;  // d/d stored log-scale
};

/// Mean over points of (lambda_pos L_pos + lambda_s L_s) / sqrt(a), using the
/// bound triangle's area and size from `frames`.
RegLoss reg_loss(const BoundCloud& cloud, const std::vector<TriangleFrame>& frames, const RegConfig& cfg = {});

}  // namespace headgs
