// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "waterflow/diffusion.hpp"
#include "waterflow/embed.hpp"
#include "waterflow/flow.hpp"
#include "waterflow/mask.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

enum class DetectionMode { kStored, kRecompute };
/// Degrees of freedom: q = ΣM (default) or q = 2·ΣM.
enum class DofConvention { kMaskCount, kTwiceMaskCount };

DetectionMode parse_detection_mode(const std::string& name);

struct DetectionConfig {
  double threshold = 0.9;
  DetectionMode mode = DetectionMode::kStored;
  DofConvention dof = DofConvention::kMaskCount;
};

struct DetectionReport {
  double sigma2 = 0.0;
  bool sigma2_clamped = false;
  double eta = 0.0;
  std::size_t q = 0;
  double lambda = 0.0;
  double p_value = 1.0;
  double detection_probability = 0.0;
  bool decision = false;
};

inline constexpr double kSigma2Floor = 1e-12;

/// Centred spectra of every channel of G'(image).
ComplexTensor recover_spectrum(const RealTensor& image, const Diffusion& diffusion);
/// Last channel of recover_spectrum.
ComplexTensor recover_y(const RealTensor& image, const Diffusion& diffusion);

/// Mean |y|² over the mask, clamped below at kSigma2Floor.
double estimate_sigma2(const ComplexTensor& y, const CircularMask& mask, bool* clamped = nullptr);

/// (1/σ²)·Σ_M |W* − y|².
double eta_score(const ComplexTensor& y, const ComplexTensor& wstar, const CircularMask& mask, double sigma2);

/// Pr(χ²_{q,λ} ≤ x) as a Poisson(λ/2) mixture of regularised lower
/// incomplete gamma functions P(q/2 + k, x/2).
double noncentral_chi2_cdf(double x, double q, double lambda);

/// Statistic and p-value for a recovered spectrum stack against a record.
DetectionReport detect_spectrum(const ComplexTensor& spectrum, const WatermarkRecord& record, const FlowParams* flow,
                                const DetectionConfig& cfg);

/// Full procedure: DDIM inversion, W* lookup (stored) or rebuild (recompute), test.
DetectionReport detect(const RealTensor& image, const WatermarkRecord& record, const Diffusion& diffusion,
                       const FlowParams* flow, const DetectionConfig& cfg);

}  // namespace wf
