// SPDX-License-Identifier: Apache-2.0
// Microbenchmarks for the hot paths: FFT, convolution, DDIM, embed, detect.
#include <benchmark/benchmark.h>

#include <memory>

#include "waterflow/dataset.hpp"
#include "waterflow/denoiser.hpp"
#include "waterflow/detection.hpp"
#include "waterflow/diffusion.hpp"
#include "waterflow/embed.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/kernels.hpp"
#include "waterflow/rng.hpp"

namespace {

using namespace wf;

// Untrained network: same cost per call as a trained one.
Diffusion toy_diffusion() {
  Diffusion d;
  d.sched = make_schedule(50, 1e-4, 0.02);
  d.predictor = std::make_shared<ConvNetPredictor>(ConvNetParams::init(ConvNetConfig{}, 1));
  return d;
}

void BM_Fft2Centered(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const RealTensor x = rng.normal_tensor({4, n, n});
  for (auto _ : state) benchmark::DoNotOptimize(fft2_centered(x));
}
BENCHMARK(BM_Fft2Centered)->Arg(16)->Arg(32)->Arg(64);

void BM_Conv2d3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const RealTensor x = rng.normal_tensor({c, 32, 32});
  const RealTensor w = rng.normal_tensor({c, c, 9});
  const std::vector<double> b(c, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conv2d(x, w, b));
}
BENCHMARK(BM_Conv2d3x3)->Arg(4)->Arg(16);

void BM_DdimGenerate(benchmark::State& state) {
  const Diffusion d = toy_diffusion();
  Rng rng(3);
  const RealTensor z = rng.normal_tensor({4, 32, 32});
  for (auto _ : state) benchmark::DoNotOptimize(d.generate(z));
}
BENCHMARK(BM_DdimGenerate)->Unit(benchmark::kMillisecond);

void BM_Embed(benchmark::State& state) {
  const Diffusion d = toy_diffusion();
  const RealTensor x0 = make_toy_image(ImageFamily::kDisk, 4, {4, 32, 32});
  const TreeRingKey key = tree_ring_key(0, 10, 32, 32);
  const FlowParams flow = FlowParams::init(FlowConfig{}, false);
  for (auto _ : state) benchmark::DoNotOptimize(embed(x0, key, flow, d, EmbedConfig{}));
}
BENCHMARK(BM_Embed)->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
  const Diffusion d = toy_diffusion();
  const RealTensor x0 = make_toy_image(ImageFamily::kStripes, 5, {4, 32, 32});
  const TreeRingKey key = tree_ring_key(0, 10, 32, 32);
  const FlowParams flow = FlowParams::init(FlowConfig{}, false);
  const EmbedResult e = embed(x0, key, flow, d, EmbedConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(detect(e.image, e.record, d, &flow, DetectionConfig{}));
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

void BM_NoncentralChi2Cdf(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(noncentral_chi2_cdf(900.0, 317.0, 700.0));
}
BENCHMARK(BM_NoncentralChi2Cdf);

}  // namespace

BENCHMARK_MAIN();
