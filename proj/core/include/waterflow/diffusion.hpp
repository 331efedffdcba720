// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "waterflow/autodiff.hpp"
#include "waterflow/denoiser.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

/// beta[t] and alpha_bar[t] for t = 0..T-1. Diffusion *level* k in 0..T
/// has ᾱ = 1 at k = 0 and alpha_bar[k-1] otherwise; x_T lives at level T.
struct NoiseSchedule {
  std::size_t T = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  double alpha_bar_level(std::size_t level) const { return level == 0 ? 1.0 : alpha_bar.at(level - 1); }
};

/// Linear β ramp from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end);
/// Schedule from an explicit β list.
NoiseSchedule make_schedule(std::vector<double> beta);

/// √ᾱ·x0 + √(1-ᾱ)·eps at the given level (level 0 returns x0).
RealTensor forward_noise(const RealTensor& x0, std::size_t level, const RealTensor& eps, const NoiseSchedule& sched);

/// Deterministic DDIM from `start_level` down to level 0.
RealTensor ddim_generate(const RealTensor& z, const NoisePredictor& predictor, const NoiseSchedule& sched,
                         std::size_t start_level);
inline RealTensor ddim_generate(const RealTensor& zT, const NoisePredictor& predictor, const NoiseSchedule& sched) {
  return ddim_generate(zT, predictor, sched, sched.T);
}

/// Reverse recurrence from level 0 up to level T. Each step evaluates the
/// predictor at the step's target timestep.
RealTensor ddim_invert(const RealTensor& x0, const NoisePredictor& predictor, const NoiseSchedule& sched);

/// Differentiable generation (gradients flow to the latent only; predictor
/// parameters enter as constants).
Var ddim_generate(Var zT, const NoisePredictor& predictor, const NoiseSchedule& sched);

/// A schedule plus a predictor, shared read-only by embed, detect and attacks.
struct Diffusion {
  NoiseSchedule sched;
  std::shared_ptr<const NoisePredictor> predictor;
  /// Free-form identifiers recorded in watermark records.
  std::string schedule_id = "linear";
  std::string predictor_id;

  RealTensor generate(const RealTensor& zT) const { return ddim_generate(zT, *predictor, sched); }
  RealTensor invert(const RealTensor& x0) const { return ddim_invert(x0, *predictor, sched); }
};

/// Images in [0,1] live in the diffusion state as 2x-1.
RealTensor image_to_latent(const RealTensor& image);
RealTensor latent_to_image(const RealTensor& latent);
Var latent_to_image(Var latent);

}  // namespace wf
