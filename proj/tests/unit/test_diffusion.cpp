// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "waterflow/diffusion.hpp"
#include "waterflow/error.hpp"
#include "waterflow/rng.hpp"

using namespace wf;

TEST(Schedule, TwoStepProduct) {
  const NoiseSchedule s = make_schedule({0.1, 0.1});
  ASSERT_EQ(s.T, 2u);
  EXPECT_NEAR(s.alpha_bar[0], 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar[1], 0.81, 1e-15);
}

TEST(Schedule, DefaultRampIsStrictlyDecreasing) {
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  EXPECT_LT(s.alpha_bar[0], 1.0);
  for (std::size_t t = 1; t < s.T; ++t) EXPECT_LT(s.alpha_bar[t], s.alpha_bar[t - 1]);
  EXPECT_GT(s.alpha_bar.back(), 0.0);
  EXPECT_NEAR(s.beta.front(), 1e-4, 1e-18);
  EXPECT_NEAR(s.beta.back(), 0.02, 1e-15);
}

TEST(Schedule, Recurrence) {
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  for (std::size_t t = 1; t < s.T; ++t) EXPECT_NEAR(s.alpha_bar[t] / s.alpha_bar[t - 1], 1.0 - s.beta[t], 1e-12);
}

TEST(Schedule, RejectsBadBetas) {
  EXPECT_THROW(make_schedule(50, 0.0, 0.02), ConfigError);
  EXPECT_THROW(make_schedule(50, 0.03, 0.02), ConfigError);
  EXPECT_THROW(make_schedule(50, 1e-4, 1.0), ConfigError);
  EXPECT_THROW(make_schedule(1, 1e-4, 0.02), ConfigError);
}

TEST(ForwardNoise, LevelZeroIsIdentity) {
  Rng rng(1);
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.02);
  const RealTensor x = rng.normal_tensor({2, 4, 4});
  EXPECT_EQ(forward_noise(x, 0, rng.normal_tensor({2, 4, 4}), s), x);
}

TEST(ForwardNoise, ZeroEpsScales) {
  Rng rng(2);
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.02);
  const RealTensor x = rng.normal_tensor({1, 4, 4});
  const RealTensor out = forward_noise(x, 7, RealTensor(x.shape()), s);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], std::sqrt(s.alpha_bar[6]) * x[i], 1e-15);
}

TEST(ForwardNoise, MatchesFormula) {
  Rng rng(3);
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  for (std::size_t level : {1u, 13u, 50u}) {
    const RealTensor x = rng.normal_tensor({2, 4, 4});
    const RealTensor e = rng.normal_tensor({2, 4, 4});
    const RealTensor out = forward_noise(x, level, e, s);
    const double a = s.alpha_bar[level - 1];
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], std::sqrt(a) * x[i] + std::sqrt(1 - a) * e[i], 1e-12);
  }
  EXPECT_THROW(forward_noise(RealTensor({1, 2, 2}), 51, RealTensor({1, 2, 2}), s), ContractError);
}

TEST(Ddim, ZeroPredictorClosedForm) {
  Rng rng(4);
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  const RealTensor z = rng.normal_tensor({4, 8, 8});
  const ZeroPredictor zero;
  const RealTensor x = ddim_generate(z, zero, s);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(x[i], z[i] / std::sqrt(s.alpha_bar.back()), 1e-12);
  EXPECT_LE(max_abs_diff(ddim_invert(x, zero, s), z), 1e-12);
}

TEST(Ddim, LinearPredictorMatchesTextbookLoop) {
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  const LinearPredictor lin(0.1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const RealTensor z = rng.normal_tensor({4, 8, 8});
    const auto eps = [](const RealTensor& x, std::size_t) {
      RealTensor e = x;
      for (auto& v : e.data()) v *= 0.1;
      return e;
    };
    EXPECT_LE(max_abs_diff(ddim_generate(z, lin, s), oracle::ddim_generate_loop(z, eps, s.alpha_bar)), 1e-8);
  }
}

TEST(Ddim, LinearPredictorScalarRecurrence) {
  // With ε = a·x every element follows x ← (cx + ce·a)·x, one scalar per step.
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  const double a = 0.1;
  double factor = 1.0;
  for (std::size_t t = s.T; t-- > 0;) {
    const double ab = s.alpha_bar[t], prev = t == 0 ? 1.0 : s.alpha_bar[t - 1];
    factor *= std::sqrt(prev) * (1.0 - std::sqrt(1 - ab) * a) / std::sqrt(ab) + std::sqrt(1 - prev) * a;
  }
  Rng rng(6);
  const RealTensor z = rng.normal_tensor({1, 8, 8});
  const RealTensor x = ddim_generate(z, LinearPredictor(a), s);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(x[i], factor * z[i], 1e-8);
}

TEST(Ddim, SingleStepSchedule) {
  // make_schedule(T, ...) needs T ≥ 2, but an explicit one-element list is allowed.
  const NoiseSchedule s = make_schedule(std::vector<double>{0.3});
  Rng rng(7);
  const RealTensor z = rng.normal_tensor({1, 8, 8});
  const LinearPredictor lin(0.2);
  const RealTensor x = ddim_generate(z, lin, s);
  for (std::size_t i = 0; i < z.size(); ++i)
    EXPECT_NEAR(x[i], (z[i] - std::sqrt(1 - 0.7) * 0.2 * z[i]) / std::sqrt(0.7), 1e-12);
}

TEST(Ddim, LinearRoundTripIsClose) {
  // The inversion evaluates ε at the current state rather than the unknown
  // next one, so the linear round trip is close but not exact.
  const NoiseSchedule s = make_schedule(50, 1e-4, 0.02);
  const LinearPredictor lin(0.1);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const RealTensor z = rng.normal_tensor({4, 8, 8});
    worst = std::max(worst, max_abs_diff(ddim_invert(ddim_generate(z, lin, s), lin, s), z));
  }
  EXPECT_LE(worst, 3e-3);
}

TEST(Ddim, ShapePreserved) {
  const auto d = testsupport::linear_diffusion();
  Rng rng(8);
  const RealTensor z = rng.normal_tensor({3, 8, 16});
  EXPECT_EQ(d.generate(z).shape(), z.shape());
  EXPECT_EQ(d.invert(z).shape(), z.shape());
}

TEST(Ddim, PartialGenerationFromLevel) {
  const NoiseSchedule s = make_schedule(10, 1e-3, 0.05);
  Rng rng(9);
  const RealTensor z = rng.normal_tensor({1, 8, 8});
  EXPECT_EQ(ddim_generate(z, ZeroPredictor(), s, 0), z);
  const RealTensor x = ddim_generate(z, ZeroPredictor(), s, 4);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(x[i], z[i] / std::sqrt(s.alpha_bar[3]), 1e-12);
}

TEST(Ddim, GraphMatchesFastPath) {
  const auto d = testsupport::linear_diffusion(0.07);
  Rng rng(10);
  const RealTensor z = rng.normal_tensor({2, 8, 8});
  Graph g;
  const Var out = ddim_generate(g.constant(z), *d.predictor, d.sched);
  EXPECT_LE(max_abs_diff(out.value(), d.generate(z)), 1e-12);
}

TEST(Ddim, LatentCodec) {
  Rng rng(11);
  RealTensor x({1, 4, 4});
  for (auto& v : x.data()) v = rng.uniform();
  const RealTensor l = image_to_latent(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(l[i], 2 * x[i] - 1);
  EXPECT_LE(max_abs_diff(latent_to_image(l), x), 1e-15);
}
