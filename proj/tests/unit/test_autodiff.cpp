// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "waterflow/autodiff.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/kernels.hpp"
#include "waterflow/rng.hpp"

using namespace wf;
using testsupport::gradcheck;
using testsupport::project;

namespace {

constexpr int kCases = 20;
constexpr double kTol = 1e-4;

RealTensor uniform_tensor(Shape s, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  RealTensor t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST(Autodiff, SquareAtThree) {
  Graph g;
  const Var x = g.parameter(RealTensor({1, 1, 1}, 3.0));
  g.backward(sum(x * x));
  EXPECT_DOUBLE_EQ(g.grad(x)[0], 6.0);
}

TEST(Autodiff, MseGradientIsTwoDiffOverN) {
  Rng rng(1);
  const RealTensor a = rng.normal_tensor({2, 3, 4});
  const RealTensor b = rng.normal_tensor({2, 3, 4});
  Graph g;
  const Var va = g.parameter(a);
  g.backward(mse(va, g.constant(b)));
  const RealTensor ga = g.grad(va);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(ga[i], 2.0 * (a[i] - b[i]) / 24.0, 1e-15);
}

TEST(Autodiff, ConstantsGetNoGradient) {
  Graph g;
  const Var c = g.constant(RealTensor({1, 1, 2}, 1.0));
  const Var p = g.parameter(RealTensor({1, 1, 2}, 2.0));
  g.backward(sum(c * p));
  EXPECT_FALSE(c.requires_grad());
  const RealTensor gc = g.grad(c);
  for (double v : gc.data()) EXPECT_EQ(v, 0.0);
}

TEST(Autodiff, SharedNodeAccumulates) {
  Graph g;
  const Var x = g.parameter(RealTensor({1, 1, 1}, 2.0));
  const Var y = x + x * x;
  g.backward(sum(y));
  EXPECT_DOUBLE_EQ(g.grad(x)[0], 5.0);
}

TEST(Kernels, ConvMatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const RealTensor x = rng.normal_tensor({3, 7, 9});
    for (std::size_t k : {1u, 3u, 5u}) {
      const RealTensor w = rng.normal_tensor({4, 3, k * k});
      const RealTensor b = rng.normal_tensor({1, 1, 4});
      const RealTensor ours = kernels::conv2d(x, w, b.data());
      const RealTensor ref = oracle::conv2d(x, w, b.vec());
      EXPECT_LE(max_abs_diff(ours, ref), 1e-12) << "k=" << k;
    }
  }
}

TEST(Kernels, MatmulMatchesLoops) {
  Rng rng(2);
  const RealTensor a = rng.normal_tensor({1, 3, 5});
  const RealTensor b = rng.normal_tensor({1, 5, 2});
  const RealTensor c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 5; ++k) acc += a[i * 5 + k] * b[k * 2 + j];
      EXPECT_NEAR(c[i * 2 + j], acc, 1e-13);
    }
}

TEST(Kernels, LipSwishMatchesFormulaAndIsContractive) {
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    EXPECT_NEAR(kernels::activate(kernels::Activation::kLipSwish, x), oracle::lipswish(x), 1e-15);
    EXPECT_LE(std::abs(kernels::activate_derivative(kernels::Activation::kLipSwish, x)), 1.0);
  }
}

TEST(Gradcheck, Add) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(100 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) { return project(g, v[0] + v[1], s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 3, 3}), rng.normal_tensor({2, 3, 3})}), kTol);
  }
}

TEST(Gradcheck, Sub) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(200 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) { return project(g, v[0] - v[1], s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({1, 4, 3}), rng.normal_tensor({1, 4, 3})}), kTol);
  }
}

TEST(Gradcheck, Mul) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(300 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) { return project(g, v[0] * v[1], s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 2, 3}), rng.normal_tensor({2, 2, 3})}), kTol);
  }
}

TEST(Gradcheck, Scale) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(400 + s);
    const double k = rng.normal();
    const auto fn = [s, k](Graph& g, const std::vector<Var>& v) { return project(g, scale(v[0], k), s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({1, 3, 3})}), kTol);
  }
}

TEST(Gradcheck, Matmul) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(500 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) { return project(g, matmul(v[0], v[1]), s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({1, 3, 4}), rng.normal_tensor({1, 4, 2})}), kTol);
  }
}

TEST(Gradcheck, Conv2d) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(600 + s);
    const std::size_t k = s % 2 == 0 ? 3 : 1;
    const auto fn = [s](Graph& g, const std::vector<Var>& v) { return project(g, conv2d(v[0], v[1], v[2]), s); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 5, 4}), rng.normal_tensor({3, 2, k * k}), rng.normal_tensor({1, 1, 3})}),
              kTol);
  }
}

TEST(Gradcheck, Activations) {
  using kernels::Activation;
  for (Activation a : {Activation::kIdentity, Activation::kLipSwish, Activation::kSiLU, Activation::kTanh,
                       Activation::kReLU}) {
    for (int s = 0; s < kCases; ++s) {
      Rng rng(700 + s);
      const auto fn = [s, a](Graph& g, const std::vector<Var>& v) { return project(g, activate(v[0], a), s); };
      EXPECT_LE(gradcheck(fn, {rng.normal_tensor({1, 4, 4})}), kTol) << static_cast<int>(a);
    }
  }
}

TEST(Gradcheck, SumAndMean) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(800 + s);
    const RealTensor x = rng.normal_tensor({2, 3, 2});
    const auto fs = [](Graph& g, const std::vector<Var>& v) { return scale(sum(v[0] * v[0]), 0.5); };
    const auto fm = [](Graph& g, const std::vector<Var>& v) { return mean(v[0] * v[0]); };
    EXPECT_LE(gradcheck(fs, {x}), kTol);
    EXPECT_LE(gradcheck(fm, {x}), kTol);
  }
}

TEST(Gradcheck, Mse) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(900 + s);
    const auto fn = [](Graph& g, const std::vector<Var>& v) { return mse(v[0], v[1]); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 4, 4}), rng.normal_tensor({2, 4, 4})}), kTol);
  }
}

TEST(Gradcheck, Ssim) {
  for (int s = 0; s < kCases; ++s) {
    const RealTensor a = uniform_tensor({2, 10, 9}, 1000 + s, 0.0, 1.0);
    const RealTensor b = uniform_tensor({2, 10, 9}, 1100 + s, 0.0, 1.0);
    const auto fn = [&b](Graph& g, const std::vector<Var>& v) { return ssim(v[0], g.constant(b)); };
    EXPECT_LE(gradcheck(fn, {a}), kTol);
  }
}

TEST(Gradcheck, SplitJoin) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(1200 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) {
      const Var parts[] = {split(v[0], 1, 2), v[1], split(v[0], 0, 1)};
      return project(g, join(parts), s);
    };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({3, 3, 4}), rng.normal_tensor({1, 3, 4})}), kTol);
  }
}

TEST(Gradcheck, MaskedSum) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(1300 + s);
    RealTensor mask({1, 4, 4});
    for (auto& m : mask.data()) m = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const auto fn = [&mask](Graph& g, const std::vector<Var>& v) { return masked_sum(v[0] * v[0], mask); };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 4, 4})}), kTol);
  }
}

TEST(Gradcheck, CentredFft) {
  for (int s = 0; s < kCases; ++s) {
    Rng rng(1400 + s);
    const auto fn = [s](Graph& g, const std::vector<Var>& v) {
      const CVar out = fft2_centered(CVar{v[0], v[1]});
      return project(g, out.re, s) + project(g, out.im, s + 1000);
    };
    EXPECT_LE(gradcheck(fn, {rng.normal_tensor({2, 8, 8}), rng.normal_tensor({2, 8, 8})}), kTol);
  }
}
