// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "waterflow/diffusion.hpp"
#include "waterflow/flow.hpp"
#include "waterflow/mask.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

struct EmbedConfig {
  std::uint64_t key_seed = 0;
  double radius = 10.0;
  double ssim_threshold = 0.95;
  InjectionScope scope = InjectionScope::kLastChannel;
  bool store_wstar = true;
};

/// Everything a detector needs to verify one embedded image.
struct WatermarkRecord {
  std::uint64_t key_seed = 0;
  double radius = 0.0;
  InjectionScope scope = InjectionScope::kLastChannel;
  std::string flow_id;
  /// W* as realised in the latent (Hermitian part, zero outside the mask).
  std::optional<ComplexTensor> wstar;
  double gamma = 0.0;
  double ssim_threshold = 0.0;
  std::string schedule_id;
  std::string predictor_id;
  std::size_t h = 0;
  std::size_t w = 0;
};

/// Latent-side half of the watermarking procedure.
struct LatentWatermark {
  ComplexTensor injected;  // F(Z'_T), all channels
  ComplexTensor wstar;     // raw flow output, 1×h×w
  ComplexTensor embedded;  // F(Z_{W*}) last-channel plane before the inverse FFT
  RealTensor latent;       // Z_{W*}
};

/// Key injection, flow, last-channel masked replacement and inverse FFT.
/// Channels 0..c-2 of the result are those of Z'_T.
LatentWatermark watermark_latent(const RealTensor& zT, const TreeRingKey& key, const CircularMask& mask,
                                 const FlowParams& flow, InjectionScope scope);

/// Restriction of hermitian_part(W*) to the mask: the component of W* that
/// survives the real-valued inverse transform.
ComplexTensor realized_wstar(const ComplexTensor& wstar, const CircularMask& mask);

/// Minimal γ ∈ [0,1] (20-step bisection) with SSIM(γ·x0 + (1-γ)·x̂0, x0) ≥ s*.
std::pair<RealTensor, double> adaptive_enhance(const RealTensor& x0, const RealTensor& xhat, double s_star);

struct EmbedTiming {
  double inversion_s = 0.0;
  double generation_s = 0.0;
  double total_s = 0.0;
};

struct EmbedResult {
  RealTensor image;      // x̄0
  RealTensor generated;  // x̂0, clamped to [0,1]
  WatermarkRecord record;
  ComplexTensor wstar_raw;
  EmbedTiming timing;
  /// Always 0: embedding is inference only. Kept so callers can assert it.
  std::size_t optimizer_steps = 0;
};

EmbedResult embed(const RealTensor& x0, const TreeRingKey& key, const FlowParams& flow, const Diffusion& diffusion,
                  const EmbedConfig& cfg, const std::string& flow_id = "");

/// Writes `<stem>.json`; a stored W* goes to `<stem>.wstar.ltns` next to it.
void save_record(const std::filesystem::path& json_path, const WatermarkRecord& record);
WatermarkRecord load_record(const std::filesystem::path& json_path);

}  // namespace wf
