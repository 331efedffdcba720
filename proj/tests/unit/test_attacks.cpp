// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "waterflow/attacks.hpp"
#include "waterflow/error.hpp"
#include "waterflow/metrics.hpp"

using namespace wf;

namespace {

RealTensor random_image(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  RealTensor t(s);
  for (auto& v : t.data()) v = rng.uniform();
  return t;
}

void expect_in_unit_range(const RealTensor& x) {
  for (double v : x.data()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

}  // namespace

TEST(Brightness, Examples) {
  const RealTensor x = random_image({3, 16, 16}, 1);
  EXPECT_EQ(brightness(x, 1.0), x);
  const RealTensor c = brightness(RealTensor({1, 8, 8}, 0.8), 0.5);
  for (double v : c.data()) EXPECT_NEAR(v, 0.4, 1e-15);
  const RealTensor b = brightness(x, 1.7);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(b[i], std::min(1.0, x[i] * 1.7));
}

TEST(Contrast, Examples) {
  const RealTensor x = random_image({3, 16, 16}, 2);
  EXPECT_LE(max_abs_diff(contrast(x, 1.0), x), 1e-15);
  const RealTensor k({2, 8, 8}, 0.3);
  EXPECT_LE(max_abs_diff(contrast(k, 0.2), k), 1e-15);
  const RealTensor c = contrast(x, 0.5);  // shrinking never clamps
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
      ma += x[ch * 256 + i];
      mb += c[ch * 256 + i];
    }
    EXPECT_NEAR(ma / 256, mb / 256, 1e-6);
  }
}

TEST(Jpeg, QuantTable) {
  const std::vector<int> q50 = jpeg_quant_table(50);
  EXPECT_EQ(q50[0], 16);
  EXPECT_EQ(q50[1], 11);
  EXPECT_EQ(q50[63], 99);
  for (int v : jpeg_quant_table(100)) EXPECT_EQ(v, 1);
  EXPECT_EQ(jpeg_quant_table(1)[0], 255);
}

TEST(Jpeg, DctMatchesMatrixOracle) {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> block(64);
    for (auto& v : block) v = rng.uniform(-128.0, 127.0);
    const auto ours = dct8x8(block), ref = oracle::dct8x8(block);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(ours[i], ref[i], 1e-8);
    const auto back = idct8x8(ours);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[i], block[i], 1e-9);
  }
}

TEST(Jpeg, ConstantSurvives) {
  const RealTensor k({2, 16, 16}, 100.0 / 255.0);
  EXPECT_LE(max_abs_diff(jpeg(k, 50), k), 1e-12);
}

TEST(Jpeg, HighQualityOnGradient) {
  RealTensor x({1, 32, 32});
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t i = 0; i < 32; ++i) x.at(0, y, i) = (y + i) / 62.0;
  EXPECT_GE(psnr(jpeg(x, 100), x), 40.0);
}

TEST(Jpeg, RandomImageChangesAndStaysInRange) {
  const RealTensor x = random_image({1, 16, 16}, 4);
  const RealTensor j = jpeg(x, 50);
  EXPECT_GT(max_abs_diff(j, x), 0.01);
  expect_in_unit_range(j);
  EXPECT_THROW(jpeg(RealTensor({1, 12, 16}), 50), DimensionError);
  EXPECT_THROW(jpeg(x, 0), ConfigError);
}

TEST(Rotate, FourTurnsIsIdentity) {
  const RealTensor x = random_image({2, 8, 8}, 5);
  EXPECT_EQ(rotate90(rotate90(rotate90(rotate90(x)))), x);
}

TEST(Rotate, CornerPixelMovesCounterClockwise) {
  RealTensor x({1, 8, 8});
  x.at(0, 0, 0) = 1.0;
  const RealTensor r = rotate90(x);
  EXPECT_EQ(r.at(0, 7, 0), 1.0);
  double total = 0.0;
  for (double v : r.data()) total += v;
  EXPECT_EQ(total, 1.0);
}

TEST(Rotate, MultisetPreserved) {
  const RealTensor x = random_image({3, 16, 16}, 6);
  auto a = x.vec(), b = rotate90(x).vec();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_THROW(rotate90(RealTensor({1, 8, 16})), DimensionError);
}

TEST(GaussianNoise, Examples) {
  const RealTensor x = random_image({1, 16, 16}, 7);
  EXPECT_EQ(gaussian_noise(x, 0.0, 1), x);
  EXPECT_EQ(gaussian_noise(x, 0.05, 9), gaussian_noise(x, 0.05, 9));
  const RealTensor mid({1, 64, 64}, 0.5);
  const RealTensor n = gaussian_noise(mid, 0.05, 3);
  double s2 = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) s2 += (n[i] - 0.5) * (n[i] - 0.5);
  EXPECT_NEAR(std::sqrt(s2 / n.size()), 0.05, 0.05 * 0.05);
  expect_in_unit_range(gaussian_noise(x, 0.3, 2));
}

TEST(GaussianBlur, Examples) {
  const RealTensor k({1, 16, 16}, 0.6);
  EXPECT_LE(max_abs_diff(gaussian_blur(k), k), 1e-15);
  const auto taps = gaussian_kernel(5, 1.0);
  double sum = 0.0;
  for (double t : taps) sum += t;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  RealTensor imp({1, 16, 16});
  imp.at(0, 8, 8) = 1.0;
  const RealTensor b = gaussian_blur(imp);
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx)
      EXPECT_NEAR(b.at(0, 8 + dy, 8 + dx), taps[dy + 2] * taps[dx + 2], 1e-15);
  EXPECT_THROW(gaussian_blur(k, 4, 1.0), ConfigError);
}

TEST(GaussianBlur, MatchesDenseOracle) {
  const RealTensor x = random_image({2, 16, 16}, 8);
  EXPECT_LE(max_abs_diff(gaussian_blur(x), oracle::blur_dense(x, gaussian_kernel(5, 1.0))), 1e-10);
}

TEST(Regen, LevelZeroIsIdentity) {
  const auto d = testsupport::linear_diffusion();
  const RealTensor x = random_image({4, 8, 8}, 9);
  EXPECT_LE(max_abs_diff(regen_attack(x, 0, d, 1), x), 1e-12);
}

TEST(Regen, DeeperLevelsRemoveMore) {
  // ᾱ_T is about 0.6 for this schedule, so even a full-depth regeneration
  // keeps much of the image; only the ordering is asserted.
  const auto& d = testsupport::trained_diffusion();
  ToyDatasetConfig dc;
  dc.seed = 31;
  dc.count = 8;
  const auto images = generate_toy_dataset(dc);
  auto mean_ssim = [&](std::size_t level) {
    double total = 0.0;
    for (const auto& img : images) total += ssim(regen_attack(img, level, d, 4), img);
    return total / static_cast<double>(images.size());
  };
  const double shallow = mean_ssim(5), deep = mean_ssim(d.sched.T);
  EXPECT_LT(shallow, 1.0);
  EXPECT_LT(deep, shallow);
}

TEST(Regen, DefaultLevelIsMild) {
  const auto& d = testsupport::trained_diffusion();
  ToyDatasetConfig dc;
  dc.seed = 32;
  dc.count = 8;
  double total = 0.0;
  const AttackParams p;
  for (const auto& img : generate_toy_dataset(dc)) {
    const RealTensor r = regen_attack(img, p.regen_level, d, 5);
    expect_in_unit_range(r);
    total += psnr(r, img);
  }
  EXPECT_GE(total / 8.0, 18.0);
  EXPECT_LE(total / 8.0, 28.0);
}

TEST(Composite, Expansion) {
  const auto all = expand_attack("all");
  const auto nr = expand_attack("all_no_rotation");
  EXPECT_EQ(all.size(), nr.size() + 1);
  std::vector<AttackKind> diff;
  std::set_difference(all.begin(), all.end(), nr.begin(), nr.end(), std::back_inserter(diff));
  ASSERT_EQ(diff.size(), 1u);
  EXPECT_EQ(diff[0], AttackKind::kRotate90);
  EXPECT_EQ(expand_attack("jpeg"), std::vector<AttackKind>{AttackKind::kJpeg});
  EXPECT_EQ(parse_attack_kind("rotation"), AttackKind::kRotate90);
  EXPECT_THROW(expand_attack("crop"), ConfigError);
}

TEST(Composite, SingletonEqualsSingleAttack) {
  const RealTensor x = random_image({2, 16, 16}, 10);
  AttackParams p;
  EXPECT_EQ(composite(x, {AttackKind::kJpeg}, p, nullptr), jpeg(x, 50));
  EXPECT_EQ(composite(x, {AttackKind::kBrightness}, p, nullptr), brightness(x, 0.5));
}

TEST(Composite, OrderIsFixed) {
  const RealTensor x = random_image({2, 16, 16}, 11);
  AttackParams p;
  const RealTensor a = composite(x, {AttackKind::kGaussianBlur, AttackKind::kBrightness, AttackKind::kJpeg}, p, nullptr);
  const RealTensor b = composite(x, {AttackKind::kJpeg, AttackKind::kGaussianBlur, AttackKind::kBrightness}, p, nullptr);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, gaussian_blur(jpeg(brightness(x, 0.5), 50), 5, 1.0));
}

TEST(Composite, DeterministicAndInRange) {
  const auto d = testsupport::linear_diffusion();
  RealTensor x = random_image({4, 16, 16}, 12);
  AttackParams p;
  p.seed = 3;
  p.regen_level = 5;
  const RealTensor a = apply_attack(x, "all", p, &d);
  EXPECT_EQ(a, apply_attack(x, "all", p, &d));
  expect_in_unit_range(a);
  EXPECT_THROW(apply_attack(x, "regen", p, nullptr), ConfigError);
}
