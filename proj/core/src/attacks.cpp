// SPDX-License-Identifier: Apache-2.0
#include "waterflow/attacks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "waterflow/error.hpp"
#include "waterflow/rng.hpp"

namespace wf {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

// cos((2m+1)uπ/16) with orthonormal scaling.
const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> b{};
    for (int u = 0; u < 8; ++u)
      for (int m = 0; m < 8; ++m) {
        const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        b[static_cast<std::size_t>(u * 8 + m)] = cu * std::cos((2 * m + 1) * u * std::numbers::pi / 16.0);
      }
    return b;
  }();
  return basis;
}

}  // namespace

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "brightness") return AttackKind::kBrightness;
  if (name == "contrast") return AttackKind::kContrast;
  if (name == "jpeg") return AttackKind::kJpeg;
  if (name == "rotate90" || name == "rotation") return AttackKind::kRotate90;
  if (name == "gnoise") return AttackKind::kGaussianNoise;
  if (name == "gblur") return AttackKind::kGaussianBlur;
  if (name == "regen") return AttackKind::kRegen;
  throw ConfigError("unknown attack '" + name + "'");
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kBrightness:
      return "brightness";
    case AttackKind::kContrast:
      return "contrast";
    case AttackKind::kJpeg:
      return "jpeg";
    case AttackKind::kRotate90:
      return "rotate90";
    case AttackKind::kGaussianNoise:
      return "gnoise";
    case AttackKind::kGaussianBlur:
      return "gblur";
    case AttackKind::kRegen:
      return "regen";
  }
  return "unknown";
}

RealTensor brightness(const RealTensor& x, double factor) {
  if (!(factor > 0.0)) throw ConfigError("brightness: factor must be positive");
  RealTensor out = x;
  for (auto& v : out.data()) v = clamp01(v * factor);
  return out;
}

RealTensor contrast(const RealTensor& x, double factor) {
  if (!(factor > 0.0)) throw ConfigError("contrast: factor must be positive");
  const auto& s = x.shape();
  RealTensor out = x;
  for (std::size_t c = 0; c < s.c; ++c) {
    auto ch = out.channel(c);
    double mu = 0.0;
    for (double v : ch) mu += v;
    mu /= static_cast<double>(ch.size());
    for (auto& v : ch) v = clamp01((v - mu) * factor + mu);
  }
  return out;
}

std::vector<int> jpeg_quant_table(int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("jpeg: quality must be in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::vector<int> q(64);
  for (std::size_t i = 0; i < 64; ++i) q[i] = std::clamp((kLuminance[i] * scale + 50) / 100, 1, 255);
  return q;
}

std::vector<double> dct8x8(const std::vector<double>& block) {
  const auto& b = dct_basis();
  std::vector<double> tmp(64, 0.0), out(64, 0.0);
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[static_cast<std::size_t>(u * 8 + y)] * block[static_cast<std::size_t>(y * 8 + x)];
      tmp[static_cast<std::size_t>(u * 8 + x)] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += tmp[static_cast<std::size_t>(u * 8 + x)] * b[static_cast<std::size_t>(v * 8 + x)];
      out[static_cast<std::size_t>(u * 8 + v)] = s;
    }
  return out;
}

std::vector<double> idct8x8(const std::vector<double>& coeffs) {
  const auto& b = dct_basis();
  std::vector<double> tmp(64, 0.0), out(64, 0.0);
  for (int y = 0; y < 8; ++y)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[static_cast<std::size_t>(u * 8 + y)] * coeffs[static_cast<std::size_t>(u * 8 + v)];
      tmp[static_cast<std::size_t>(y * 8 + v)] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += tmp[static_cast<std::size_t>(y * 8 + v)] * b[static_cast<std::size_t>(v * 8 + x)];
      out[static_cast<std::size_t>(y * 8 + x)] = s;
    }
  return out;
}

RealTensor jpeg(const RealTensor& x, int quality) {
  const auto& s = x.shape();
  if (s.h % 8 != 0 || s.w % 8 != 0) throw DimensionError("jpeg: height and width must be multiples of 8");
  const auto q = jpeg_quant_table(quality);
  RealTensor out(s);
  std::vector<double> block(64);
  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t by = 0; by < s.h; by += 8)
      for (std::size_t bx = 0; bx < s.w; bx += 8) {
        // Work in 8-bit sample units, level-shifted by 128.
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t xx = 0; xx < 8; ++xx) block[y * 8 + xx] = x.at(c, by + y, bx + xx) * 255.0 - 128.0;
        auto coeffs = dct8x8(block);
        for (std::size_t i = 0; i < 64; ++i) coeffs[i] = std::round(coeffs[i] / q[i]) * q[i];
        const auto rec = idct8x8(coeffs);
        for (std::size_t y = 0; y < 8; ++y)
          for (std::size_t xx = 0; xx < 8; ++xx) out.at(c, by + y, bx + xx) = clamp01((rec[y * 8 + xx] + 128.0) / 255.0);
      }
  return out;
}

RealTensor rotate90(const RealTensor& x) {
  const auto& s = x.shape();
  if (s.h != s.w) throw DimensionError("rotate90: image must be square");
  RealTensor out(s);
  const std::size_t n = s.w;
  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t xx = 0; xx < n; ++xx) out.at(c, y, xx) = x.at(c, xx, n - 1 - y);
  return out;
}

RealTensor gaussian_noise(const RealTensor& x, double stddev, std::uint64_t seed) {
  if (stddev < 0.0) throw ConfigError("gaussian_noise: stddev must be >= 0");
  Rng rng(seed);
  RealTensor out = x;
  for (auto& v : out.data()) v = clamp01(v + stddev * rng.normal());
  return out;
}

std::vector<double> gaussian_kernel(int ksize, double sigma) {
  if (ksize < 1 || ksize % 2 == 0) throw ConfigError("gaussian_blur: kernel size must be odd and positive");
  if (!(sigma > 0.0)) throw ConfigError("gaussian_blur: sigma must be positive");
  std::vector<double> k(static_cast<std::size_t>(ksize));
  const int half = ksize / 2;
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[static_cast<std::size_t>(i + half)];
  }
  for (auto& v : k) v /= total;
  return k;
}

RealTensor gaussian_blur(const RealTensor& x, int ksize, double sigma) {
  const auto k = gaussian_kernel(ksize, sigma);
  const auto& s = x.shape();
  const int half = ksize / 2;
  if (static_cast<int>(s.h) <= half || static_cast<int>(s.w) <= half) throw DimensionError("gaussian_blur: image too small");
  // Reflect without repeating the edge sample: -1 -> 1, n -> n-2.
  auto reflect = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  const int H = static_cast<int>(s.h), W = static_cast<int>(s.w);
  RealTensor tmp(s), out(s);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t)
          acc += k[static_cast<std::size_t>(t + half)] * x.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(reflect(xx + t, W)));
        tmp.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) = acc;
      }
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t)
          acc += k[static_cast<std::size_t>(t + half)] * tmp.at(c, static_cast<std::size_t>(reflect(y + t, H)), static_cast<std::size_t>(xx));
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) = clamp01(acc);
      }
  }
  return out;
}

RealTensor regen_attack(const RealTensor& x, std::size_t level, const Diffusion& diffusion, std::uint64_t seed) {
  if (level > diffusion.sched.T) throw ConfigError("regen: level beyond the schedule length");
  if (level == 0) return x;
  if (!diffusion.predictor) throw ConfigError("regen: no noise predictor loaded");
  Rng rng(seed);
  const RealTensor eps = rng.normal_tensor(x.shape());
  const RealTensor noisy = forward_noise(image_to_latent(x), level, eps, diffusion.sched);
  RealTensor out = latent_to_image(ddim_generate(noisy, *diffusion.predictor, diffusion.sched, level));
  for (auto& v : out.data()) v = clamp01(v);
  return out;
}

std::vector<AttackKind> expand_attack(const std::string& name) {
  using K = AttackKind;
  if (name == "all") return {K::kBrightness, K::kContrast, K::kJpeg, K::kRotate90, K::kGaussianNoise, K::kGaussianBlur, K::kRegen};
  if (name == "all_no_rotation") return {K::kBrightness, K::kContrast, K::kJpeg, K::kGaussianNoise, K::kGaussianBlur, K::kRegen};
  return {parse_attack_kind(name)};
}

RealTensor composite(const RealTensor& x, const std::vector<AttackKind>& kinds, const AttackParams& p,
                     const Diffusion* diffusion) {
  if (kinds.empty()) throw ConfigError("composite: no attacks given");
  std::vector<AttackKind> ordered = kinds;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  RealTensor out = x;
  for (AttackKind k : ordered) {
    // Each stochastic stage gets its own stream derived from the composite seed.
    const std::uint64_t stage_seed = derive_seed(p.seed, static_cast<std::uint64_t>(k));
    switch (k) {
      case AttackKind::kBrightness:
        out = brightness(out, p.brightness);
        break;
      case AttackKind::kContrast:
        out = contrast(out, p.contrast);
        break;
      case AttackKind::kJpeg:
        out = jpeg(out, p.jpeg_quality);
        break;
      case AttackKind::kRotate90:
        out = rotate90(out);
        break;
      case AttackKind::kGaussianNoise:
        out = gaussian_noise(out, p.noise_std, stage_seed);
        break;
      case AttackKind::kGaussianBlur:
        out = gaussian_blur(out, p.blur_ksize, p.blur_sigma);
        break;
      case AttackKind::kRegen:
        if (diffusion == nullptr) throw ConfigError("composite: regen requested without a diffusion model");
        out = regen_attack(out, p.regen_level, *diffusion, stage_seed);
        break;
    }
  }
  return out;
}

RealTensor apply_attack(const RealTensor& x, const std::string& name, const AttackParams& params,
                        const Diffusion* diffusion) {
  return composite(x, expand_attack(name), params, diffusion);
}

}  // namespace wf
