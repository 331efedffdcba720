// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/metrics.hpp"
#include "waterflow/rng.hpp"

using namespace wf;

namespace {

RealTensor checkerboard(std::size_t n) {
  RealTensor x({1, n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t i = 0; i < n; ++i) x.at(0, y, i) = static_cast<double>((y + i) % 2);
  return x;
}

RealTensor uniform_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  RealTensor t(s);
  for (auto& v : t.data()) v = rng.uniform();
  return t;
}

}  // namespace

TEST(Ssim, SelfSimilarityIsOne) {
  const RealTensor x = uniform_tensor({3, 16, 16}, 1);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-15);
}

TEST(Ssim, CheckerboardAgainstComplement) {
  const RealTensor x = checkerboard(16);
  RealTensor y = x;
  for (auto& v : y.data()) v = 1.0 - v;
  // Every window has equal means, variance 1/4 and covariance -1/4, so only
  // the C2 stabiliser keeps the value off -1.
  const double c2 = 0.03 * 0.03;
  const double expected = (-0.5 + c2) / (0.5 + c2);
  EXPECT_NEAR(ssim(x, y), expected, 1e-12);
  EXPECT_NEAR(ssim(x, y), -1.0, 4e-3);
}

TEST(Ssim, MatchesWindowedOracle) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const RealTensor a = uniform_tensor({2, 20, 13}, seed);
    const RealTensor b = uniform_tensor({2, 20, 13}, seed + 50);
    EXPECT_NEAR(ssim(a, b), oracle::ssim_windowed(a, b), 1e-8);
  }
}

TEST(Ssim, Symmetric) {
  const RealTensor a = uniform_tensor({1, 16, 16}, 3);
  const RealTensor b = uniform_tensor({1, 16, 16}, 4);
  EXPECT_EQ(ssim(a, b), ssim(b, a));
}

TEST(Ssim, ShapeMismatch) {
  EXPECT_THROW(ssim(RealTensor({1, 8, 8}), RealTensor({1, 8, 9})), DimensionError);
}

TEST(Psnr, IdenticalSentinel) {
  const RealTensor x = uniform_tensor({1, 8, 8}, 2);
  EXPECT_TRUE(psnr_is_identical(psnr(x, x)));
}

TEST(Psnr, OffsetOfOneTenthIsTwentyDb) {
  const RealTensor a({1, 8, 8}, 0.3);
  const RealTensor b({1, 8, 8}, 0.4);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-10);
}

TEST(Psnr, MatchesDirectMse) {
  const RealTensor a = uniform_tensor({2, 8, 8}, 5);
  const RealTensor b = uniform_tensor({2, 8, 8}, 6);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m += (a[i] - b[i]) * (a[i] - b[i]);
  m /= static_cast<double>(a.size());
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / m), 1e-12);
}

TEST(Psnr, ShapeMismatch) {
  EXPECT_THROW(psnr(RealTensor({1, 8, 8}), RealTensor({2, 8, 8})), DimensionError);
}

TEST(Fft, Linearity) {
  Rng rng(9);
  const RealTensor x = rng.normal_tensor({1, 16, 16});
  const RealTensor y = rng.normal_tensor({1, 16, 16});
  RealTensor z(x.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = 2.0 * x[i] - 0.5 * y[i];
  const ComplexTensor fx = fft2_centered(x), fy = fft2_centered(y), fz = fft2_centered(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(fz.re()[i], 2.0 * fx.re()[i] - 0.5 * fy.re()[i], 1e-10);
    EXPECT_NEAR(fz.im()[i], 2.0 * fx.im()[i] - 0.5 * fy.im()[i], 1e-10);
  }
}

TEST(Fft, DcOnlySpectrumInvertsToConstant) {
  ComplexTensor s({1, 16, 16});
  s.re()[8 * 16 + 8] = 16.0;
  const RealTensor x = ifft2_centered_real(s);
  for (double v : x.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}
