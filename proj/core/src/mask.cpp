// SPDX-License-Identifier: Apache-2.0
#include "waterflow/mask.hpp"

#include <cmath>
#include <vector>

#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/rng.hpp"

namespace wf {
namespace {

double centre_distance(std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  const double dy = static_cast<double>(y) - static_cast<double>(h / 2);
  const double dx = static_cast<double>(x) - static_cast<double>(w / 2);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::size_t CircularMask::count() const {
  std::size_t n = 0;
  for (double b : bits.data()) n += b != 0.0 ? 1 : 0;
  return n;
}

CircularMask circular_mask(std::size_t h, std::size_t w, double r) {
  if (h < 8 || w < 8) throw DimensionError("circular_mask: plane must be at least 8x8");
  if (!std::isfinite(r) || r < 0.0) throw ConfigError("circular_mask: radius must be finite and >= 0");
  CircularMask m{h, w, r, RealTensor({1, h, w})};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(h / 2);
      const double dx = static_cast<double>(x) - static_cast<double>(w / 2);
      m.bits[y * w + x] = dx * dx + dy * dy <= r * r ? 1.0 : 0.0;
    }
  }
  return m;
}

TreeRingKey tree_ring_key(std::uint64_t seed, double r, std::size_t h, std::size_t w) {
  if (r < 1.0) throw ConfigError("tree_ring_key: radius must be >= 1");
  const CircularMask mask = circular_mask(h, w, r);
  Rng rng(seed);
  const ComplexTensor spectrum = fft2_centered(rng.normal_tensor({1, h, w}));
  TreeRingKey key{seed, r, ComplexTensor({1, h, w})};
  const auto rings = static_cast<std::size_t>(std::floor(r)) + 1;
  std::vector<long> canonical(rings + 1, -1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.contains(y, x)) continue;
      const auto ring = static_cast<std::size_t>(std::lround(centre_distance(y, x, h, w)));
      if (canonical[ring] < 0) canonical[ring] = static_cast<long>(y * w + x);
      const auto src = static_cast<std::size_t>(canonical[ring]);
      key.pattern.re()[y * w + x] = spectrum.re()[src];
      key.pattern.im()[y * w + x] = spectrum.im()[src];
    }
  }
  return key;
}

ComplexTensor inject_tree_ring(const ComplexTensor& spectrum, const TreeRingKey& key, const CircularMask& mask,
                               InjectionScope scope) {
  const auto& s = spectrum.shape();
  if (key.pattern.shape() != Shape{1, s.h, s.w} || mask.h != s.h || mask.w != s.w) {
    throw DimensionError("inject_tree_ring: key/mask plane does not match spectrum " + to_string(s));
  }
  ComplexTensor out = spectrum;
  const std::size_t first = scope == InjectionScope::kLastChannel ? s.c - 1 : 0;
  for (std::size_t c = first; c < s.c; ++c) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      if (mask.bits[i] == 0.0) continue;
      out.re()[c * s.plane() + i] = key.pattern.re()[i];
      out.im()[c * s.plane() + i] = key.pattern.im()[i];
    }
  }
  return out;
}

ComplexTensor masked_blend(const ComplexTensor& base, const ComplexTensor& inner, const CircularMask& mask) {
  require_same_shape(base.shape(), inner.shape(), "masked_blend");
  if (base.shape() != Shape{1, mask.h, mask.w}) throw DimensionError("masked_blend: expects one plane matching the mask");
  ComplexTensor out = base;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    out.re()[i] = inner.re()[i];
    out.im()[i] = inner.im()[i];
  }
  return out;
}

InjectionScope parse_injection_scope(const std::string& name) {
  if (name == "last") return InjectionScope::kLastChannel;
  if (name == "all") return InjectionScope::kAllChannels;
  throw ConfigError("injection scope must be 'last' or 'all', got '" + name + "'");
}

std::string scope_name(InjectionScope scope) { return scope == InjectionScope::kLastChannel ? "last" : "all"; }

}  // namespace wf
