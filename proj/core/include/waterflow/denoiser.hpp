// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "waterflow/autodiff.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

struct NoiseSchedule;

/// ε-prediction network interface. `t` is the 0-based schedule index.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual RealTensor predict(const RealTensor& x, std::size_t t) const = 0;
  /// Graph version; gradients flow to `x` only.
  virtual Var predict(Var x, std::size_t t) const = 0;
  virtual std::string kind() const = 0;
};

/// ε ≡ 0.
class ZeroPredictor final : public NoisePredictor {
 public:
  RealTensor predict(const RealTensor& x, std::size_t t) const override;
  Var predict(Var x, std::size_t t) const override;
  std::string kind() const override { return "zero"; }
};

/// ε(x) = a·x, independent of t.
class LinearPredictor final : public NoisePredictor {
 public:
  explicit LinearPredictor(double a = 0.1) : a_(a) {}
  RealTensor predict(const RealTensor& x, std::size_t t) const override;
  Var predict(Var x, std::size_t t) const override;
  std::string kind() const override { return "linear"; }
  double slope() const { return a_; }

 private:
  double a_;
};

struct ConvNetConfig {
  std::size_t channels = 4;
  std::size_t hidden = 16;
  std::size_t embed_dim = 16;
  /// Number of schedule steps; scales the timestep embedding.
  std::size_t T = 50;
};

/// Three 3×3 conv layers with SiLU; a sinusoidal timestep embedding is
/// projected to per-channel biases of the first two layers.
struct ConvNetParams {
  ConvNetConfig cfg;
  RealTensor c1_w, c1_b, c2_w, c2_b, c3_w, c3_b;
  RealTensor p1_w, p1_b, p2_w, p2_b;

  static ConvNetParams init(const ConvNetConfig& cfg, std::uint64_t seed);
  std::vector<RealTensor*> tensors();
  std::vector<const RealTensor*> tensors() const;
  std::vector<std::string> names() const;
};

/// 1×1×embed_dim sin/cos embedding of schedule index t.
RealTensor timestep_embedding(std::size_t t, std::size_t dim, std::size_t T);

class ConvNetPredictor final : public NoisePredictor {
 public:
  explicit ConvNetPredictor(ConvNetParams params) : params_(std::move(params)) {}
  RealTensor predict(const RealTensor& x, std::size_t t) const override;
  Var predict(Var x, std::size_t t) const override;
  std::string kind() const override { return "convnet"; }
  const ConvNetParams& params() const { return params_; }

 private:
  ConvNetParams params_;
};

/// Graph form where each parameter tensor is already a node (constant or trainable).
struct ConvNetVars {
  Var c1_w, c1_b, c2_w, c2_b, c3_w, c3_b, p1_w, p1_b, p2_w, p2_b;
};
Var convnet_forward(const ConvNetVars& v, Var x, std::size_t t, const ConvNetConfig& cfg);

struct DenoiserTrainConfig {
  std::size_t steps = 1500;
  std::size_t batch = 8;
  double lr = 2e-3;
  std::uint64_t seed = 7;
  std::size_t hidden = 16;
};

struct DenoiserTrainResult {
  ConvNetParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

/// Minimises E‖ε − ε_θ(√ᾱ x + √(1−ᾱ) ε)‖² over the latents of `images`.
DenoiserTrainResult train_denoiser(const std::vector<RealTensor>& images, const NoiseSchedule& sched,
                                   const DenoiserTrainConfig& cfg);

/// Mean ε-prediction loss for fixed parameters on a fixed seeded draw.
double denoiser_loss(const ConvNetParams& params, const std::vector<RealTensor>& images, const NoiseSchedule& sched,
                     std::uint64_t seed, std::size_t draws);

void save_denoiser(const std::filesystem::path& manifest, const ConvNetParams& params, const NoiseSchedule& sched,
                   const nlohmann::json& extra = nlohmann::json::object());
/// Loads a checkpoint written by save_denoiser; the schedule stored alongside is returned via `sched`.
ConvNetParams load_denoiser(const std::filesystem::path& manifest, NoiseSchedule* sched = nullptr);

}  // namespace wf
