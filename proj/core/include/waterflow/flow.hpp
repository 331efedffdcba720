// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "waterflow/autodiff.hpp"
#include "waterflow/mask.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

struct FlowConfig {
  std::size_t channels = 4;
  std::size_t hidden = 16;
  std::size_t blocks = 2;
  double lipschitz = 0.9;
  /// Plane size the conv operators act on; fixes the power-iteration vectors.
  std::size_t h = 32;
  std::size_t w = 32;
  std::uint64_t seed = 0;
};

/// One convolution of a residual branch plus its persisted power-iteration vector.
struct FlowConv {
  RealTensor weight;  // (out, in, k*k)
  RealTensor bias;    // (1, 1, out)
  RealTensor u;       // (in, h, w), unit norm
};

/// g(x) = conv3(act(conv2(act(conv1(x))))) with kernels 3, 1, 3 and LipSwish.
struct ResidualBlock {
  std::array<FlowConv, 3> convs;
};

/// x ↦ x + g_K(...(x + g_1(x))).
struct FlowNet {
  std::vector<ResidualBlock> blocks;
};

/// The two networks of the learned watermark: one for the real part of the
/// spectrum, one for the imaginary part.
struct FlowParams {
  FlowConfig cfg;
  FlowNet real;
  FlowNet imag;

  /// Seeded init. With `zero_last` the final conv of every block is zero, so
  /// the flow starts as the identity. Spectral normalisation is applied.
  static FlowParams init(const FlowConfig& cfg, bool zero_last = true);
  /// All-zero residual branches: the flow reduces to last-channel extraction.
  static FlowParams identity(const FlowConfig& cfg);

  /// Trainable tensors (weights and biases) in a fixed order.
  std::vector<RealTensor*> tensors();
  std::vector<const RealTensor*> tensors() const;
  std::vector<std::string> names() const;
};

RealTensor residual_branch(const ResidualBlock& block, const RealTensor& x);
RealTensor apply_net(const FlowNet& net, const RealTensor& x);

/// W* = last channel of H_real(Re S) + j·(last channel of H_imag(Im S)).
ComplexTensor apply_flow(const ComplexTensor& spectrum, const FlowParams& params);

/// Solves x + g(x) = y block by block in reverse by fixed-point iteration.
/// Throws NumericError if an iteration fails to reach `tol` in `max_iter` steps.
RealTensor invert_net(const FlowNet& net, const RealTensor& y, std::size_t max_iter = 100, double tol = 1e-10);

/// Power iteration on the zero-padded conv operator; updates `conv.u` and
/// returns the largest-singular-value estimate.
double power_iteration(FlowConv& conv, std::size_t h, std::size_t w, std::size_t iterations);

/// Rescales every conv whose estimate exceeds the Lipschitz target.
void spectral_normalize(FlowParams& params, std::size_t iterations);
void spectral_normalize(FlowNet& net, const FlowConfig& cfg, std::size_t iterations);

/// −(1/(h·w))·Σ_M |S − W*|² between one spectrum plane and W*.
double loss_n(const ComplexTensor& spectrum_plane, const ComplexTensor& wstar, const CircularMask& mask);

/// Graph-side handles for one network.
struct FlowNetVars {
  std::vector<std::array<std::pair<Var, Var>, 3>> blocks;  // (weight, bias)
};
FlowNetVars flow_net_vars(Graph& g, const FlowNet& net, bool trainable);
Var apply_net(const FlowNetVars& net, Var x);
CVar apply_flow(CVar spectrum, const FlowNetVars& real, const FlowNetVars& imag);
Var loss_n(CVar spectrum_plane, CVar wstar, const CircularMask& mask);

/// Checkpoint: manifest JSON {K, hidden, lipschitz_const, seed, step, loss, ...}
/// plus an LTNS payload with weights, biases and power-iteration vectors.
void save_flow(const std::filesystem::path& manifest, const FlowParams& params,
               const nlohmann::json& extra = nlohmann::json::object());
FlowParams load_flow(const std::filesystem::path& manifest, nlohmann::json* metadata = nullptr);

}  // namespace wf
