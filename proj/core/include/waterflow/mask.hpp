// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "waterflow/tensor.hpp"

namespace wf {

/// Disk of radius r around the zero-frequency cell (h/2, w/2) of a centred spectrum.
struct CircularMask {
  std::size_t h = 0;
  std::size_t w = 0;
  double radius = 0.0;
  /// 1×h×w plane of 0.0 / 1.0.
  RealTensor bits;

  bool contains(std::size_t y, std::size_t x) const { return bits[y * w + x] != 0.0; }
  std::size_t count() const;
};

CircularMask circular_mask(std::size_t h, std::size_t w, double r);

/// Concentric-ring pattern with constant values along each integer ring,
/// zero outside the disk.
struct TreeRingKey {
  std::uint64_t seed = 0;
  double radius = 0.0;
  ComplexTensor pattern;  // 1×h×w
};

/// Rings use rounded distance from the centre. Each ring copies the value the
/// seeded Gaussian plane's centred spectrum has at the ring's first cell in
/// row-major order.
TreeRingKey tree_ring_key(std::uint64_t seed, double r, std::size_t h, std::size_t w);

enum class InjectionScope { kLastChannel, kAllChannels };

/// "last" or "all".
InjectionScope parse_injection_scope(const std::string& name);
std::string scope_name(InjectionScope scope);

/// Overwrites masked cells of the selected channels with the key pattern.
ComplexTensor inject_tree_ring(const ComplexTensor& spectrum, const TreeRingKey& key, const CircularMask& mask,
                               InjectionScope scope = InjectionScope::kLastChannel);

/// out = base⊙(1-M) + M⊙inner for a single 1×h×w plane.
ComplexTensor masked_blend(const ComplexTensor& base, const ComplexTensor& inner, const CircularMask& mask);

}  // namespace wf
