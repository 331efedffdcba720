// SPDX-License-Identifier: Apache-2.0
#include "waterflow/detection.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"

namespace wf {

DetectionMode parse_detection_mode(const std::string& name) {
  if (name == "stored") return DetectionMode::kStored;
  if (name == "recompute") return DetectionMode::kRecompute;
  throw ConfigError("detection mode must be 'stored' or 'recompute', got '" + name + "'");
}

ComplexTensor recover_spectrum(const RealTensor& image, const Diffusion& diffusion) {
  if (!diffusion.predictor) throw ConfigError("detect: no noise predictor loaded");
  return fft2_centered(diffusion.invert(image_to_latent(image)));
}

ComplexTensor recover_y(const RealTensor& image, const Diffusion& diffusion) {
  const ComplexTensor s = recover_spectrum(image, diffusion);
  return s.channel_tensor(s.shape().c - 1);
}

double estimate_sigma2(const ComplexTensor& y, const CircularMask& mask, bool* clamped) {
  if (y.shape() != Shape{1, mask.h, mask.w}) throw DimensionError("estimate_sigma2: y must be one plane matching the mask");
  const std::size_t n = mask.count();
  if (n == 0) throw ConfigError("estimate_sigma2: mask is empty");
  double s = 0.0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    s += y.re()[i] * y.re()[i] + y.im()[i] * y.im()[i];
  }
  const double sigma2 = s / static_cast<double>(n);
  const bool low = !(sigma2 >= kSigma2Floor);
  if (clamped != nullptr) *clamped = low;
  return low ? kSigma2Floor : sigma2;
}

double eta_score(const ComplexTensor& y, const ComplexTensor& wstar, const CircularMask& mask, double sigma2) {
  if (!(sigma2 > 0.0)) throw ContractError("eta_score: sigma2 must be positive");
  require_same_shape(y.shape(), wstar.shape(), "eta_score");
  if (y.shape() != Shape{1, mask.h, mask.w}) throw DimensionError("eta_score: planes must match the mask");
  double s = 0.0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    const double dr = wstar.re()[i] - y.re()[i];
    const double di = wstar.im()[i] - y.im()[i];
    s += dr * dr + di * di;
  }
  return s / sigma2;
}

double noncentral_chi2_cdf(double x, double q, double lambda) {
  if (!std::isfinite(x) || !std::isfinite(q) || !std::isfinite(lambda) || x < 0.0 || q < 1.0 || lambda < 0.0) {
    throw ContractError("noncentral_chi2_cdf: need finite x >= 0, q >= 1, lambda >= 0");
  }
  if (x == 0.0) return 0.0;
  const double a = 0.5 * q;
  const double hx = 0.5 * x;
  const double mu = 0.5 * lambda;
  if (mu == 0.0) return boost::math::gamma_p(a, hx);

  constexpr double kStop = 1e-16;
  // Poisson weights in log space starting at the mode, so large λ cannot underflow e^{-λ/2}.
  const double mode = std::floor(mu);
  auto log_weight = [&](double k) { return -mu + k * std::log(mu) - std::lgamma(k + 1.0); };

  double total = 0.0;
  // Upward from the mode: P(a+k, ·) falls with k, and beyond the mode the
  // weights shrink at least geometrically with ratio mu/(k+1).
  for (double k = mode;; k += 1.0) {
    const double term = std::exp(log_weight(k)) * boost::math::gamma_p(a + k, hx);
    total += term;
    const double ratio = mu / (k + 2.0);
    if (ratio < 1.0 && term / (1.0 - ratio) < kStop) break;
    if (k - mode > 1e7) throw NumericError("noncentral_chi2_cdf: series failed to converge");
  }
  // Downward: weights shrink with ratio k/mu; P is at most 1.
  for (double k = mode - 1.0; k >= 0.0; k -= 1.0) {
    const double w = std::exp(log_weight(k));
    total += w * boost::math::gamma_p(a + k, hx);
    const double ratio = k / mu;
    if (ratio < 1.0 && w * ratio / (1.0 - ratio) < kStop) break;
  }
  return std::clamp(total, 0.0, 1.0);
}

DetectionReport detect_spectrum(const ComplexTensor& spectrum, const WatermarkRecord& record, const FlowParams* flow,
                                const DetectionConfig& cfg) {
  const auto& s = spectrum.shape();
  if (record.h != 0 && (record.h != s.h || record.w != s.w)) {
    throw DimensionError("detect: record plane size does not match the image");
  }
  const CircularMask mask = circular_mask(s.h, s.w, record.radius);
  const ComplexTensor y = spectrum.channel_tensor(s.c - 1);
  ComplexTensor wstar;
  if (cfg.mode == DetectionMode::kStored) {
    if (!record.wstar) throw ConfigError("detect: stored mode needs a record with W*");
    wstar = *record.wstar;
  } else {
    if (flow == nullptr) throw ConfigError("detect: recompute mode needs flow parameters");
    const TreeRingKey key = tree_ring_key(record.key_seed, record.radius, s.h, s.w);
    wstar = realized_wstar(apply_flow(inject_tree_ring(spectrum, key, mask, record.scope), *flow), mask);
  }
  DetectionReport rep;
  rep.sigma2 = estimate_sigma2(y, mask, &rep.sigma2_clamped);
  rep.eta = eta_score(y, wstar, mask, rep.sigma2);
  const std::size_t m = mask.count();
  rep.q = cfg.dof == DofConvention::kMaskCount ? m : 2 * m;
  double energy = 0.0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    energy += wstar.re()[i] * wstar.re()[i] + wstar.im()[i] * wstar.im()[i];
  }
  rep.lambda = energy / rep.sigma2;
  rep.p_value = noncentral_chi2_cdf(rep.eta, static_cast<double>(rep.q), rep.lambda);
  rep.detection_probability = 1.0 - rep.p_value;
  rep.decision = rep.detection_probability > cfg.threshold;
  return rep;
}

DetectionReport detect(const RealTensor& image, const WatermarkRecord& record, const Diffusion& diffusion,
                       const FlowParams* flow, const DetectionConfig& cfg) {
  return detect_spectrum(recover_spectrum(image, diffusion), record, flow, cfg);
}

}  // namespace wf
