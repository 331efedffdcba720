// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "waterflow/diffusion.hpp"
#include "waterflow/error.hpp"

namespace wf {

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
  if (T < 2) throw ConfigError("schedule: T must be at least 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> beta(T);
  for (std::size_t t = 0; t < T; ++t) {
    beta[t] = beta_start + (beta_end - beta_start) * static_cast<double>(t) / static_cast<double>(T - 1);
  }
  return make_schedule(std::move(beta));
}

NoiseSchedule make_schedule(std::vector<double> beta) {
  if (beta.empty()) throw ConfigError("schedule: empty beta list");
  NoiseSchedule s;
  s.T = beta.size();
  double prod = 1.0;
  for (double b : beta) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("schedule: beta " + std::to_string(b) + " outside (0,1)");
    prod *= 1.0 - b;
    s.alpha_bar.push_back(prod);
  }
  s.beta = std::move(beta);
  return s;
}

RealTensor forward_noise(const RealTensor& x0, std::size_t level, const RealTensor& eps, const NoiseSchedule& sched) {
  if (level > sched.T) throw ContractError("forward_noise: level " + std::to_string(level) + " beyond T");
  require_same_shape(x0.shape(), eps.shape(), "forward_noise");
  if (level == 0) return x0;
  const double ab = sched.alpha_bar_level(level);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  RealTensor out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

RealTensor image_to_latent(const RealTensor& image) {
  RealTensor z = image;
  for (auto& v : z.data()) v = 2.0 * v - 1.0;
  return z;
}

RealTensor latent_to_image(const RealTensor& latent) {
  RealTensor x = latent;
  for (auto& v : x.data()) v = 0.5 * (v + 1.0);
  return x;
}

Var latent_to_image(Var latent) {
  Graph& g = *latent.graph();
  return scale(latent + g.constant(RealTensor(latent.shape(), 1.0)), 0.5);
}

}  // namespace wf
