// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>
#include <utility>

#include "waterflow/diffusion.hpp"
#include "waterflow/error.hpp"

namespace wf {
namespace {

void check_finite(const RealTensor& x, const char* what, std::size_t step) {
  if (!x.all_finite()) throw NumericError(std::string(what) + ": non-finite state at step " + std::to_string(step));
}

// x_next = √ā_to·x̃₀ + √(1-ā_to)·ε with x̃₀ = (x - √(1-ā_from)·ε)/√ā_from,
// regrouped as cx·x + ce·ε (shared with the graph path for identical rounding).
std::pair<double, double> step_coefficients(double ab_from, double ab_to) {
  const double cx = std::sqrt(ab_to) / std::sqrt(ab_from);
  return {cx, std::sqrt(1.0 - ab_to) - cx * std::sqrt(1.0 - ab_from)};
}

RealTensor ddim_step(const RealTensor& x, const RealTensor& eps, double ab_from, double ab_to) {
  const auto [cx, ce] = step_coefficients(ab_from, ab_to);
  RealTensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cx * x[i] + ce * eps[i];
  return out;
}

}  // namespace

RealTensor ddim_generate(const RealTensor& z, const NoisePredictor& predictor, const NoiseSchedule& sched,
                         std::size_t start_level) {
  if (start_level > sched.T) throw ContractError("ddim_generate: start level beyond T");
  RealTensor x = z;
  for (std::size_t level = start_level; level >= 1; --level) {
    const RealTensor eps = predictor.predict(x, level - 1);
    if (eps.shape() != x.shape()) throw DimensionError("ddim_generate: predictor changed the shape");
    x = ddim_step(x, eps, sched.alpha_bar_level(level), sched.alpha_bar_level(level - 1));
    check_finite(x, "ddim_generate", level - 1);
  }
  return x;
}

RealTensor ddim_invert(const RealTensor& x0, const NoisePredictor& predictor, const NoiseSchedule& sched) {
  RealTensor x = x0;
  for (std::size_t level = 0; level < sched.T; ++level) {
    const RealTensor eps = predictor.predict(x, level);
    if (eps.shape() != x.shape()) throw DimensionError("ddim_invert: predictor changed the shape");
    x = ddim_step(x, eps, sched.alpha_bar_level(level), sched.alpha_bar_level(level + 1));
    check_finite(x, "ddim_invert", level);
  }
  return x;
}

Var ddim_generate(Var zT, const NoisePredictor& predictor, const NoiseSchedule& sched) {
  Var x = zT;
  for (std::size_t level = sched.T; level >= 1; --level) {
    const Var eps = predictor.predict(x, level - 1);
    const auto [cx, ce] = step_coefficients(sched.alpha_bar_level(level), sched.alpha_bar_level(level - 1));
    x = scale(x, cx) + scale(eps, ce);
    check_finite(x.value(), "ddim_generate", level - 1);
  }
  return x;
}

}  // namespace wf
