// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <vector>

#include "waterflow/tensor.hpp"

namespace wf {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of parameter tensors; moment state is kept per tensor.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<RealTensor*>& params);

  /// One update using gradients aligned with the parameter list.
  void step(const std::vector<RealTensor>& grads);
  long steps() const { return t_; }
  /// Updates performed by every Adam instance in the process.
  static long global_steps() { return global_steps_.load(); }

 private:
  AdamConfig cfg_;
  std::vector<RealTensor*> params_;
  std::vector<RealTensor> m_, v_;
  long t_ = 0;
  static inline std::atomic<long> global_steps_{0};
};

}  // namespace wf
