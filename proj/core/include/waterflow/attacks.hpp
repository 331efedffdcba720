// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "waterflow/diffusion.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

enum class AttackKind { kBrightness, kContrast, kJpeg, kRotate90, kGaussianNoise, kGaussianBlur, kRegen };

AttackKind parse_attack_kind(const std::string& name);
std::string attack_name(AttackKind kind);

/// Parameters for every attack; only the ones relevant to the chosen kinds are read.
struct AttackParams {
  double brightness = 0.5;
  double contrast = 0.5;
  int jpeg_quality = 50;
  double noise_std = 0.05;
  int blur_ksize = 5;
  double blur_sigma = 1.0;
  /// Diffusion level the regeneration attack noises to.
  std::size_t regen_level = 20;
  std::uint64_t seed = 0;
};

RealTensor brightness(const RealTensor& x, double factor = 0.5);
RealTensor contrast(const RealTensor& x, double factor = 0.5);
RealTensor jpeg(const RealTensor& x, int quality = 50);
/// Counter-clockwise quarter turn: out(y, x) = in(x, w-1-y).
RealTensor rotate90(const RealTensor& x);
RealTensor gaussian_noise(const RealTensor& x, double stddev, std::uint64_t seed);
RealTensor gaussian_blur(const RealTensor& x, int ksize = 5, double sigma = 1.0);
/// Forward-noise to `level` with seeded ε, then DDIM back to level 0.
RealTensor regen_attack(const RealTensor& x, std::size_t level, const Diffusion& diffusion, std::uint64_t seed);

/// Normalised 1-D Gaussian taps.
std::vector<double> gaussian_kernel(int ksize, double sigma);
/// Standard JPEG luminance table scaled for the quality (IJG rule), entries clamped to [1, 255].
std::vector<int> jpeg_quant_table(int quality);
/// Orthonormal 8×8 DCT-II of one block (row-major, 64 values).
std::vector<double> dct8x8(const std::vector<double>& block);
std::vector<double> idct8x8(const std::vector<double>& coeffs);

/// Expands "all" / "all_no_rotation" or a single kind name.
std::vector<AttackKind> expand_attack(const std::string& name);

/// Applies the kinds in the fixed order brightness, contrast, jpeg, rotate90,
/// gnoise, gblur, regen, regardless of the order given. `diffusion` may be
/// null when regen is not requested.
RealTensor composite(const RealTensor& x, const std::vector<AttackKind>& kinds, const AttackParams& params,
                     const Diffusion* diffusion);

RealTensor apply_attack(const RealTensor& x, const std::string& name, const AttackParams& params,
                        const Diffusion* diffusion);

}  // namespace wf
