// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "oracles.hpp"
#include "support.hpp"
#include "waterflow/detection.hpp"
#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"

using namespace wf;

namespace {

ComplexTensor masked_gaussian(const CircularMask& m, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  ComplexTensor y({1, m.h, m.w});
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    y.re()[i] = sd * rng.normal();
    y.im()[i] = sd * rng.normal();
  }
  return y;
}

}  // namespace

TEST(Sigma2, ConstantMagnitude) {
  const CircularMask m = circular_mask(16, 16, 4.0);
  ComplexTensor y({1, 16, 16});
  for (std::size_t i = 0; i < 256; ++i) {
    y.re()[i] = 2.0 * std::cos(0.3 * i);
    y.im()[i] = 2.0 * std::sin(0.3 * i);
  }
  EXPECT_NEAR(estimate_sigma2(y, m), 4.0, 1e-12);
}

TEST(Sigma2, ZeroIsClamped) {
  const CircularMask m = circular_mask(16, 16, 4.0);
  bool clamped = false;
  EXPECT_EQ(estimate_sigma2(ComplexTensor({1, 16, 16}), m, &clamped), kSigma2Floor);
  EXPECT_TRUE(clamped);
}

TEST(Sigma2, ComplexGaussianIsTwo) {
  const CircularMask m = circular_mask(64, 64, 30.0);
  const double n = static_cast<double>(m.count());
  const double se = 2.0 / std::sqrt(n);
  EXPECT_NEAR(estimate_sigma2(masked_gaussian(m, 3), m), 2.0, 3.0 * se);
}

TEST(Sigma2, EmptyMask) {
  CircularMask m = circular_mask(16, 16, 0.0);
  m.bits = RealTensor({1, 16, 16});
  EXPECT_THROW(estimate_sigma2(ComplexTensor({1, 16, 16}), m), ConfigError);
}

TEST(Eta, EqualInsideMaskIsZero) {
  const CircularMask m = circular_mask(16, 16, 4.0);
  const ComplexTensor y = masked_gaussian(m, 4);
  ComplexTensor w = y;
  for (std::size_t i = 0; i < 256; ++i)
    if (m.bits[i] == 0.0) w.re()[i] += 5.0;
  EXPECT_EQ(eta_score(y, w, m, 1.0), 0.0);
}

TEST(Eta, SingleCellDifference) {
  const CircularMask m = circular_mask(16, 16, 4.0);
  const ComplexTensor y = masked_gaussian(m, 5);
  ComplexTensor w = y;
  w.re()[8 * 16 + 8] += 1.0;
  EXPECT_NEAR(eta_score(y, w, m, 1.0), 1.0, 1e-12);
}

TEST(Eta, MatchesLoopOracle) {
  const CircularMask m = circular_mask(32, 32, 9.0);
  const ComplexTensor y = masked_gaussian(m, 6), w = masked_gaussian(m, 7);
  double acc = 0.0;
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) {
      if (std::hypot(static_cast<double>(r) - 16.0, static_cast<double>(c) - 16.0) > 9.0) continue;
      const std::size_t i = r * 32 + c;
      acc += std::norm(std::complex<double>(w.re()[i] - y.re()[i], w.im()[i] - y.im()[i]));
    }
  EXPECT_NEAR(eta_score(y, w, m, 1.7), acc / 1.7, 1e-12 * acc);
  EXPECT_THROW(eta_score(y, w, m, 0.0), ContractError);
}

TEST(Ncx2, CentralClosedForm) {
  EXPECT_NEAR(noncentral_chi2_cdf(2.0 * std::log(2.0), 2.0, 0.0), 0.5, 1e-10);
  for (double x : {0.1, 1.0, 3.0, 10.0}) EXPECT_NEAR(noncentral_chi2_cdf(x, 2.0, 0.0), 1.0 - std::exp(-x / 2), 1e-10);
}

TEST(Ncx2, ZeroAtOrigin) {
  for (double q : {1.0, 4.0, 317.0})
    for (double l : {0.0, 1.0, 500.0}) EXPECT_EQ(noncentral_chi2_cdf(0.0, q, l), 0.0);
}

TEST(Ncx2, MatchesReferenceDistribution) {
  for (double q : {4.0, 317.0})
    for (double l : {1.0, 50.0, 500.0}) {
      const boost::math::non_central_chi_squared ref(q, l);
      for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double x = boost::math::quantile(ref, p);
        EXPECT_NEAR(noncentral_chi2_cdf(x, q, l), p, 1e-9) << q << " " << l << " " << p;
      }
    }
}

TEST(Ncx2, MonteCarloGridSmall) {
  // Same grid as the acceptance run with fewer samples.
  const std::size_t n = 200000;
  for (double q : {4.0, 317.0})
    for (double l : {1.0, 50.0, 500.0}) {
      auto samples = oracle::ncx2_samples(q, l, n, static_cast<std::uint64_t>(q * 1000 + l));
      std::sort(samples.begin(), samples.end());
      const boost::math::non_central_chi_squared ref(q, l);
      for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double x = boost::math::quantile(ref, p);
        const double emp =
            static_cast<double>(std::upper_bound(samples.begin(), samples.end(), x) - samples.begin()) / n;
        const double cdf = noncentral_chi2_cdf(x, q, l);
        EXPECT_LE(std::abs(emp - cdf), 3.0 * std::sqrt(cdf * (1 - cdf) / n) + 1e-12);
      }
    }
}

TEST(Ncx2, Monotone) {
  double prev = 0.0;
  for (double x = 0.0; x <= 800.0; x += 5.0) {
    const double c = noncentral_chi2_cdf(x, 317.0, 50.0);
    EXPECT_GE(c, prev);
    prev = c;
  }
  prev = 1.0;
  for (double l = 0.0; l <= 600.0; l += 10.0) {
    const double c = noncentral_chi2_cdf(330.0, 317.0, l);
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(Ncx2, InvalidArguments) {
  EXPECT_THROW(noncentral_chi2_cdf(-1.0, 4.0, 1.0), ContractError);
  EXPECT_THROW(noncentral_chi2_cdf(1.0, 0.5, 1.0), ContractError);
  EXPECT_THROW(noncentral_chi2_cdf(1.0, 4.0, -1.0), ContractError);
}

TEST(DetectSpectrum, ExactMatchIsCertain) {
  const CircularMask m = circular_mask(32, 32, 10.0);
  WatermarkRecord rec;
  rec.radius = 10.0;
  rec.h = rec.w = 32;
  Rng rng(8);
  const ComplexTensor spec = fft2_centered(rng.normal_tensor({4, 32, 32}));
  rec.wstar = realized_wstar(spec.channel_tensor(3), m);
  const DetectionReport r = detect_spectrum(spec, rec, nullptr, DetectionConfig{});
  EXPECT_NEAR(r.eta, 0.0, 1e-20);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_EQ(r.detection_probability, 1.0);
  EXPECT_TRUE(r.decision);
  EXPECT_EQ(r.q, m.count());
  EXPECT_EQ(r.p_value + r.detection_probability, 1.0);
}

TEST(DetectSpectrum, TwiceDofAndModes) {
  const CircularMask m = circular_mask(32, 32, 10.0);
  WatermarkRecord rec;
  rec.radius = 10.0;
  rec.h = rec.w = 32;
  Rng rng(9);
  const ComplexTensor spec = fft2_centered(rng.normal_tensor({4, 32, 32}));
  DetectionConfig cfg;
  EXPECT_THROW(detect_spectrum(spec, rec, nullptr, cfg), ConfigError);
  cfg.mode = DetectionMode::kRecompute;
  EXPECT_THROW(detect_spectrum(spec, rec, nullptr, cfg), ConfigError);
  cfg.mode = DetectionMode::kStored;
  cfg.dof = DofConvention::kTwiceMaskCount;
  rec.wstar = realized_wstar(fft2_centered(rng.normal_tensor({1, 32, 32})), m);
  EXPECT_EQ(detect_spectrum(spec, rec, nullptr, cfg).q, 2 * m.count());
  EXPECT_EQ(parse_detection_mode("recompute"), DetectionMode::kRecompute);
  EXPECT_THROW(parse_detection_mode("magic"), ConfigError);
}

TEST(DetectSpectrum, RecomputeWithIdentityFlowMatchesKey) {
  // With the identity flow, rebuilding W* from the recovered stack gives the
  // realisable part of the key inside the mask.
  const CircularMask m = circular_mask(32, 32, 10.0);
  const TreeRingKey key = tree_ring_key(2, 10.0, 32, 32);
  Rng rng(10);
  // Round-trip through the real inverse so the stack is one a real latent can carry.
  const ComplexTensor spec =
      fft2_centered(ifft2_centered_real(inject_tree_ring(fft2_centered(rng.normal_tensor({4, 32, 32})), key, m)));
  WatermarkRecord rec;
  rec.key_seed = 2;
  rec.radius = 10.0;
  rec.h = rec.w = 32;
  FlowConfig fc;
  const FlowParams id = FlowParams::identity(fc);
  DetectionConfig cfg;
  cfg.mode = DetectionMode::kRecompute;
  const DetectionReport r = detect_spectrum(spec, rec, &id, cfg);
  EXPECT_NEAR(r.eta, 0.0, 1e-18);
  EXPECT_TRUE(r.decision);
}

TEST(RecoverY, ZeroPredictorIsExact) {
  Diffusion d;
  d.sched = make_schedule(50, 1e-4, 0.02);
  d.predictor = std::make_shared<ZeroPredictor>();
  Rng rng(11);
  const RealTensor z = rng.normal_tensor({4, 16, 16});
  const RealTensor image = latent_to_image(d.generate(z));
  const ComplexTensor y = recover_y(image, d);
  EXPECT_LE(max_abs_diff(y, fft2_centered(z).channel_tensor(3)), 1e-12);
}

TEST(RecoverY, PureNoiseMaskedRegionIsGaussian) {
  // Jarque–Bera moment test over the non-redundant half of the mask.
  const auto d = testsupport::linear_diffusion();
  const CircularMask m = circular_mask(32, 32, 10.0);
  std::vector<double> re;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const RealTensor z = rng.normal_tensor({4, 32, 32});
    const ComplexTensor y = recover_y(latent_to_image(z), d);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 32; ++c)
        if (m.contains(r, c)) re.push_back(y.re()[r * 32 + c]);
  }
  const double n = static_cast<double>(re.size());
  double mean = 0.0;
  for (double v : re) mean += v / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : re) {
    const double e = v - mean;
    m2 += e * e / n;
    m3 += e * e * e / n;
    m4 += e * e * e * e / n;
  }
  const double skew = m3 / std::pow(m2, 1.5), kurt = m4 / (m2 * m2) - 3.0;
  const double jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
  EXPECT_LT(jb, 9.2103);  // χ²₂ 99th percentile
}

TEST(Detect, EmbeddedVersusClean) {
  const auto& d = testsupport::trained_diffusion();
  ToyDatasetConfig dc;
  dc.seed = 55;
  dc.count = 4;
  FlowConfig fc;
  const FlowParams id = FlowParams::identity(fc);
  const TreeRingKey key = tree_ring_key(0, 10.0, 32, 32);
  for (const auto& img : generate_toy_dataset(dc)) {
    const EmbedResult e = embed(img, key, id, d, EmbedConfig{});
    for (auto mode : {DetectionMode::kStored, DetectionMode::kRecompute}) {
      DetectionConfig cfg;
      cfg.mode = mode;
      const double wm = detect(e.image, e.record, d, &id, cfg).detection_probability;
      EXPECT_GE(wm, 0.99);
      EXPECT_LT(detect(img, e.record, d, &id, cfg).detection_probability, wm);
    }
  }
}
