#include "headgs/optimizer.hpp"

#include "headgs/errors.hpp"

#include <cmath>

namespace headgs {

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw DimensionError("parameter and gradient sizes differ");
  if (m_.empty() && v_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  if (m_.size() != params.size()) throw DimensionError("optimizer state does not match the parameter group");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void Adam::remap(std::span<const std::size_t> origin, const std::vector<bool>& created, std::size_t stride) {
  if (origin.size() != created.size()) throw DimensionError("remap tables differ in length");
  std::vector<double> m(origin.size() * stride, 0.0), v(origin.size() * stride, 0.0);
  if (!m_.empty()) {
    for (std::size_t i = 0; i < origin.size(); ++i) {
      if (created[i]) continue;
      for (std::size_t k = 0; k < stride; ++k) {
        m[i * stride + k] = m_.at(origin[i] * stride + k);
        v[i * stride + k] = v_.at(origin[i] * stride + k);
      }
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace headgs
