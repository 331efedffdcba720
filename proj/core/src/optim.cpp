// SPDX-License-Identifier: Apache-2.0
#include "waterflow/optim.hpp"

#include <cmath>

#include "waterflow/error.hpp"

namespace wf {

Adam::Adam(AdamConfig cfg, const std::vector<RealTensor*>& params) : cfg_(cfg), params_(params) {
  for (auto* p : params_) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void Adam::step(const std::vector<RealTensor>& grads) {
  if (grads.size() != params_.size()) throw ContractError("Adam::step: gradient count mismatch");
  ++t_;
  ++global_steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = *params_[k];
    const auto& g = grads[k];
    require_same_shape(p.shape(), g.shape(), "Adam::step");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k][i] = cfg_.beta1 * m_[k][i] + (1 - cfg_.beta1) * g[i];
      v_[k][i] = cfg_.beta2 * v_[k][i] + (1 - cfg_.beta2) * g[i] * g[i];
      p[i] -= cfg_.lr * (m_[k][i] / bc1) / (std::sqrt(v_[k][i] / bc2) + cfg_.eps);
    }
  }
}

}  // namespace wf
