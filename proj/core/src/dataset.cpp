// SPDX-License-Identifier: Apache-2.0
#include "waterflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "waterflow/error.hpp"
#include "waterflow/rng.hpp"

namespace wf {

ImageFamily parse_family(const std::string& name) {
  if (name == "gradient") return ImageFamily::kGradient;
  if (name == "disk") return ImageFamily::kDisk;
  if (name == "checkerboard") return ImageFamily::kCheckerboard;
  if (name == "stripes") return ImageFamily::kStripes;
  throw ConfigError("unknown image family '" + name + "'");
}

std::string family_name(ImageFamily f) {
  switch (f) {
    case ImageFamily::kGradient:
      return "gradient";
    case ImageFamily::kDisk:
      return "disk";
    case ImageFamily::kCheckerboard:
      return "checkerboard";
    case ImageFamily::kStripes:
      return "stripes";
  }
  return "unknown";
}

RealTensor make_toy_image(ImageFamily family, std::uint64_t seed, const Shape& shape) {
  Rng rng(seed);
  const std::size_t H = shape.h, W = shape.w;
  const double h = static_cast<double>(H), w = static_cast<double>(W);
  std::vector<double> lo(shape.c), hi(shape.c);
  for (auto& v : lo) v = rng.uniform(0.0, 0.4);
  for (auto& v : hi) v = rng.uniform(0.6, 1.0);

  std::vector<double> pattern(H * W);
  switch (family) {
    case ImageFamily::kGradient: {
      const double a = rng.uniform(0.0, 2 * std::numbers::pi);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double p = (std::cos(a) * (static_cast<double>(x) - w / 2) + std::sin(a) * (static_cast<double>(y) - h / 2)) /
                               (w * 0.75) + 0.5;
          pattern[y * W + x] = std::clamp(p, 0.0, 1.0);
        }
      break;
    }
    case ImageFamily::kDisk: {
      const double cx = rng.uniform(w * 10 / 32, w * 22 / 32);
      const double cy = rng.uniform(h * 10 / 32, h * 22 / 32);
      const double r = rng.uniform(w * 4 / 32, w * 9 / 32);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          pattern[y * W + x] = dx * dx + dy * dy <= r * r ? 1.0 : 0.0;
        }
      break;
    }
    case ImageFamily::kCheckerboard: {
      const std::size_t cell = rng.below(2) == 0 ? 4 : 8;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) pattern[y * W + x] = static_cast<double>((x / cell + y / cell) % 2);
      break;
    }
    case ImageFamily::kStripes: {
      const double f = rng.uniform(1.0, 4.0);
      const double a = rng.uniform(0.0, std::numbers::pi);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double u = std::cos(a) * static_cast<double>(x) + std::sin(a) * static_cast<double>(y);
          pattern[y * W + x] = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * f * u / w);
        }
      break;
    }
  }
  RealTensor img(shape);
  for (std::size_t c = 0; c < shape.c; ++c)
    for (std::size_t i = 0; i < H * W; ++i) img[c * H * W + i] = lo[c] + (hi[c] - lo[c]) * pattern[i];
  return img;
}

std::vector<RealTensor> generate_toy_dataset(const ToyDatasetConfig& cfg) {
  if (cfg.families.empty()) throw ConfigError("dataset: no families selected");
  std::vector<RealTensor> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    out.push_back(make_toy_image(cfg.families[i % cfg.families.size()], derive_seed(cfg.seed, i), cfg.shape));
  }
  return out;
}

}  // namespace wf
