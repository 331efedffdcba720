// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "waterflow/autodiff.hpp"
#include "waterflow/diffusion.hpp"
#include "waterflow/flow.hpp"
#include "waterflow/mask.hpp"
#include "waterflow/optim.hpp"

namespace wf {

/// Frozen random 3-layer conv feature extractor (3×3 kernels, ReLU). The
/// distance is the sum over layers of the feature-map MSE.
struct PerceptualProxy {
  std::array<RealTensor, 3> weights;
  std::array<RealTensor, 3> biases;

  static PerceptualProxy init(std::size_t channels, std::uint64_t seed, std::size_t width = 8);
  double distance(const RealTensor& a, const RealTensor& b) const;
  /// `b` enters as a constant.
  Var distance(Var a, const RealTensor& b) const;
};

struct FlowLossWeights {
  double l2 = 10.0;
  double ssim = 0.1;
  double perceptual = 1.0;
  double spectral = 1e-2;
  /// Multiplier on the spectral term; unset means h·w.
  std::optional<double> spectral_scale;
};

struct FlowLossTerms {
  double total = 0.0;
  double mse = 0.0;
  double ssim_loss = 0.0;
  double perceptual = 0.0;
  double spectral = 0.0;  // L_n itself, unweighted
};

/// Shared, read-only state for evaluating the training objective.
struct FlowObjective {
  const Diffusion* diffusion = nullptr;
  const TreeRingKey* key = nullptr;
  CircularMask mask;
  InjectionScope scope = InjectionScope::kLastChannel;
  PerceptualProxy perceptual;
  FlowLossWeights weights;

  double spectral_multiplier() const;

  /// λ2·MSE + λs·(1-SSIM) + λp·Lp + λn·scale·L_n for one image, built on `g`
  /// through FFT → flow → masked embed → inverse FFT → DDIM generation.
  Var loss(const FlowNetVars& real, const FlowNetVars& imag, const RealTensor& zT, const RealTensor& x0,
           FlowLossTerms* terms = nullptr) const;
  /// Forward-only evaluation of the same objective.
  FlowLossTerms evaluate(const FlowParams& params, const RealTensor& zT, const RealTensor& x0) const;
};

struct FlowTrainConfig {
  FlowLossWeights weights;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::size_t batch = 2;
  std::size_t epochs = 5;
  std::size_t checkpoint_interval = 50;
  std::size_t power_iterations = 5;
  std::uint64_t seed = 0;
  InjectionScope scope = InjectionScope::kLastChannel;
  double radius = 10.0;
  FlowConfig flow;
  /// If set, checkpoints, the best checkpoint and train_log.csv are written here.
  std::optional<std::filesystem::path> output_dir;
};

struct FlowCheckpoint {
  std::size_t step = 0;
  double loss = 0.0;
};

struct FlowTrainResult {
  FlowParams best;
  FlowCheckpoint best_checkpoint;
  double initial_loss = 0.0;
  std::vector<FlowCheckpoint> checkpoints;
  /// Per-step mean batch loss.
  std::vector<FlowCheckpoint> log;
  std::size_t steps = 0;
};

/// Adam on the composite objective, spectral normalisation after every
/// step, checkpoint evaluation on the full training set every
/// `checkpoint_interval` steps (and at step 0 and the last step); returns
/// the lowest-loss checkpoint.
FlowTrainResult train_flow(const std::vector<RealTensor>& images, const Diffusion& diffusion, const TreeRingKey& key,
                           const FlowTrainConfig& cfg);

}  // namespace wf
