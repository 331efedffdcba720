// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "waterflow/dataset.hpp"
#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/mask.hpp"
#include "waterflow/rng.hpp"

using namespace wf;

TEST(Dataset, EmptyCount) {
  ToyDatasetConfig c;
  c.count = 0;
  EXPECT_TRUE(generate_toy_dataset(c).empty());
}

TEST(Dataset, DeterministicAndPrefixStable) {
  ToyDatasetConfig c;
  c.seed = 42;
  c.count = 12;
  const auto a = generate_toy_dataset(c);
  const auto b = generate_toy_dataset(c);
  EXPECT_EQ(a, b);
  c.count = 5;
  const auto prefix = generate_toy_dataset(c);
  for (std::size_t i = 0; i < prefix.size(); ++i) EXPECT_EQ(prefix[i], a[i]);
}

TEST(Dataset, ValuesInUnitRange) {
  ToyDatasetConfig c;
  c.count = 16;
  for (const auto& img : generate_toy_dataset(c)) {
    EXPECT_EQ(img.shape(), (Shape{4, 32, 32}));
    for (double v : img.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Dataset, DiskHasOneComponent) {
  ToyDatasetConfig c;
  c.seed = 3;
  c.count = 20;
  c.families = {ImageFamily::kDisk};
  for (const auto& img : generate_toy_dataset(c))
    for (std::size_t ch = 0; ch < img.shape().c; ++ch) EXPECT_EQ(oracle::connected_components(img, ch, 0.5), 1u);
}

TEST(Dataset, UnknownFamily) { EXPECT_THROW(parse_family("clouds"), ConfigError); }

TEST(Dataset, FamilyNamesRoundTrip) {
  for (auto f : {ImageFamily::kGradient, ImageFamily::kDisk, ImageFamily::kCheckerboard, ImageFamily::kStripes})
    EXPECT_EQ(parse_family(family_name(f)), f);
}

TEST(Mask, ZeroRadiusIsCentreOnly) {
  const CircularMask m = circular_mask(16, 16, 0.0);
  EXPECT_EQ(m.count(), 1u);
  EXPECT_TRUE(m.contains(8, 8));
}

TEST(Mask, LargeRadiusCoversPlane) {
  const CircularMask m = circular_mask(16, 16, std::sqrt(128.0));
  EXPECT_EQ(m.count(), 256u);
}

TEST(Mask, MatchesBruteForce) {
  EXPECT_EQ(circular_mask(64, 64, 10.0).count(), oracle::mask_count(64, 64, 10.0));
  EXPECT_EQ(circular_mask(32, 16, 5.5).count(), oracle::mask_count(32, 16, 5.5));
}

TEST(Mask, AreaBounds) {
  for (double r = 2.0; r <= 15.0; r += 0.5) {
    const double n = static_cast<double>(circular_mask(32, 32, r).count());
    EXPECT_GE(n, std::numbers::pi * (r - 1) * (r - 1));
    EXPECT_LE(n, std::numbers::pi * (r + 1) * (r + 1));
  }
}

TEST(Mask, RejectsBadInput) {
  EXPECT_THROW(circular_mask(16, 16, -1.0), ConfigError);
  EXPECT_THROW(circular_mask(4, 16, 1.0), DimensionError);
}

TEST(Key, RingsAreConstant) {
  const TreeRingKey key = tree_ring_key(9, 10.0, 32, 32);
  std::complex<double> ring3{};
  bool seen = false;
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x) {
      const double d = std::hypot(static_cast<double>(y) - 16.0, static_cast<double>(x) - 16.0);
      if (std::lround(d) != 3) continue;
      const std::complex<double> v(key.pattern.re()[y * 32 + x], key.pattern.im()[y * 32 + x]);
      if (!seen) ring3 = v;
      seen = true;
      EXPECT_EQ(v, ring3);
    }
  EXPECT_TRUE(seen);
}

TEST(Key, ZeroOutsideMaskAndDeterministic) {
  const TreeRingKey a = tree_ring_key(4, 6.0, 32, 32);
  const TreeRingKey b = tree_ring_key(4, 6.0, 32, 32);
  EXPECT_EQ(a.pattern, b.pattern);
  const CircularMask m = circular_mask(32, 32, 6.0);
  for (std::size_t i = 0; i < 1024; ++i)
    if (m.bits[i] == 0.0) {
      EXPECT_EQ(a.pattern.re()[i], 0.0);
      EXPECT_EQ(a.pattern.im()[i], 0.0);
    }
}

TEST(Key, EnergyMatchesRegeneration) {
  // Independent rebuild: seeded plane, direct DFT, first row-major cell of each ring.
  const std::size_t n = 16;
  const double r = 5.0;
  const TreeRingKey key = tree_ring_key(11, r, n, n);
  Rng rng(11);
  const ComplexTensor spec = oracle::dft_centered(ComplexTensor(rng.normal_tensor({1, n, n})));
  std::vector<long> first(8, -1);
  double expected = 0.0, actual = 0.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double d = std::hypot(static_cast<double>(y) - 8.0, static_cast<double>(x) - 8.0);
      if (d > r) continue;
      const auto ring = static_cast<std::size_t>(std::lround(d));
      if (first[ring] < 0) first[ring] = static_cast<long>(y * n + x);
      const auto src = static_cast<std::size_t>(first[ring]);
      expected += spec.re()[src] * spec.re()[src] + spec.im()[src] * spec.im()[src];
      const std::size_t i = y * n + x;
      actual += key.pattern.re()[i] * key.pattern.re()[i] + key.pattern.im()[i] * key.pattern.im()[i];
    }
  EXPECT_GT(actual, 0.0);
  EXPECT_NEAR(actual, expected, 1e-9 * expected);
}

TEST(Inject, ZeroRadiusTouchesOneCellPerChannel) {
  Rng rng(1);
  const ComplexTensor s = fft2_centered(rng.normal_tensor({4, 16, 16}));
  TreeRingKey key = tree_ring_key(2, 1.0, 16, 16);
  key.pattern.re()[8 * 16 + 8] += 100.0;
  const CircularMask m = circular_mask(16, 16, 0.0);
  const ComplexTensor out = inject_tree_ring(s, key, m, InjectionScope::kAllChannels);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < s.size(); ++i) changed += out.re()[i] != s.re()[i] || out.im()[i] != s.im()[i];
  EXPECT_EQ(changed, 4u);
}

TEST(Inject, OwnValuesAreIdempotent) {
  Rng rng(2);
  const ComplexTensor s = fft2_centered(rng.normal_tensor({1, 16, 16}));
  const CircularMask m = circular_mask(16, 16, 4.0);
  TreeRingKey key{0, 4.0, ComplexTensor({1, 16, 16})};
  for (std::size_t i = 0; i < 256; ++i)
    if (m.bits[i] != 0.0) {
      key.pattern.re()[i] = s.re()[i];
      key.pattern.im()[i] = s.im()[i];
    }
  EXPECT_EQ(inject_tree_ring(s, key, m), s);
}

TEST(Inject, CellwisePartition) {
  Rng rng(3);
  const ComplexTensor s = fft2_centered(rng.normal_tensor({4, 32, 32}));
  const TreeRingKey key = tree_ring_key(5, 10.0, 32, 32);
  const CircularMask m = circular_mask(32, 32, 10.0);
  for (auto scope : {InjectionScope::kLastChannel, InjectionScope::kAllChannels}) {
    const ComplexTensor out = inject_tree_ring(s, key, m, scope);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 1024; ++i) {
        const std::size_t k = c * 1024 + i;
        const bool keyed = m.bits[i] != 0.0 && (scope == InjectionScope::kAllChannels || c == 3);
        EXPECT_EQ(out.re()[k], keyed ? key.pattern.re()[i] : s.re()[k]);
        EXPECT_EQ(out.im()[k], keyed ? key.pattern.im()[i] : s.im()[k]);
      }
  }
}

TEST(Inject, ShapeMismatch) {
  const TreeRingKey key = tree_ring_key(5, 3.0, 16, 16);
  EXPECT_THROW(inject_tree_ring(ComplexTensor({1, 32, 32}), key, circular_mask(16, 16, 3.0)), DimensionError);
}

TEST(Inject, ScopeNames) {
  EXPECT_EQ(parse_injection_scope("last"), InjectionScope::kLastChannel);
  EXPECT_EQ(parse_injection_scope("all"), InjectionScope::kAllChannels);
  EXPECT_THROW(parse_injection_scope("first"), ConfigError);
}
