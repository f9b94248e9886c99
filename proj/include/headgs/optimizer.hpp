#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace headgs {

/// First/second-moment adaptive optimizer over one flat parameter group.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One bias-corrected update; sizes the moment buffers on first use.
  void step(std::span<double> params, std::span<const double> grads);

  /// Rebuilds the moment buffers after the group was reshaped: entry i of the
  /// new group copies entry `origin[i]` unless `created[i]`, which starts at zero.
  void remap(std::span<const std::size_t> origin, const std::vector<bool>& created, std::size_t stride);

  int steps() const { return t_; }
  double lr() const { return lr_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace headgs
