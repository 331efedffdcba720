// SPDX-License-Identifier: Apache-2.0
#include "waterflow/flow_training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/kernels.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/rng.hpp"

namespace wf {

PerceptualProxy PerceptualProxy::init(std::size_t channels, std::uint64_t seed, std::size_t width) {
  Rng rng(seed);
  PerceptualProxy p;
  const std::array<std::size_t, 3> in{channels, width, width};
  for (std::size_t l = 0; l < 3; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in[l] * 9));
    p.weights[l] = RealTensor({width, in[l], 9});
    p.biases[l] = RealTensor({1, 1, width});
    for (auto& v : p.weights[l].data()) v = rng.uniform(-bound, bound);
    for (auto& v : p.biases[l].data()) v = rng.uniform(-bound, bound);
  }
  return p;
}

double PerceptualProxy::distance(const RealTensor& a, const RealTensor& b) const {
  using kernels::Activation;
  RealTensor fa = a, fb = b;
  double total = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    fa = kernels::activate(Activation::kReLU, kernels::conv2d(fa, weights[l], biases[l].data()));
    fb = kernels::activate(Activation::kReLU, kernels::conv2d(fb, weights[l], biases[l].data()));
    total += kernels::mse(fa, fb);
  }
  return total;
}

Var PerceptualProxy::distance(Var a, const RealTensor& b) const {
  using kernels::Activation;
  Graph& g = *a.graph();
  RealTensor fb = b;
  Var fa = a;
  Var total;
  for (std::size_t l = 0; l < 3; ++l) {
    const Var w = g.constant(weights[l]);
    const Var bias = g.constant(biases[l]);
    fa = activate(conv2d(fa, w, bias), Activation::kReLU);
    fb = kernels::activate(Activation::kReLU, kernels::conv2d(fb, weights[l], biases[l].data()));
    const Var term = mse(fa, g.constant(fb));
    total = total.valid() ? total + term : term;
  }
  return total;
}

double FlowObjective::spectral_multiplier() const {
  return weights.spectral_scale.value_or(static_cast<double>(mask.h * mask.w));
}

Var FlowObjective::loss(const FlowNetVars& real, const FlowNetVars& imag, const RealTensor& zT, const RealTensor& x0,
                        FlowLossTerms* terms) const {
  if (diffusion == nullptr || key == nullptr) throw ContractError("FlowObjective: diffusion and key must be set");
  if (real.blocks.empty()) throw ContractError("FlowObjective: empty flow network");
  Graph& g = *real.blocks[0][0].first.graph();
  const Shape s = zT.shape();
  const std::size_t last = s.c - 1;

  const ComplexTensor spectrum = fft2_centered(zT);
  const ComplexTensor injected = inject_tree_ring(spectrum, *key, mask, scope);
  const CVar spec{g.constant(injected.real_part()), g.constant(injected.imag_part())};
  const CVar wstar = apply_flow(spec, real, imag);

  // F(Z_{W*}) last plane = F(Z'_T)[-1]⊙(1-M) + M⊙W*
  ComplexTensor outside = injected.channel_tensor(last);
  for (std::size_t i = 0; i < s.plane(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    outside.re()[i] = 0.0;
    outside.im()[i] = 0.0;
  }
  const Var m = g.constant(mask.bits);
  const CVar embedded{g.constant(outside.real_part()) + wstar.re * m, g.constant(outside.imag_part()) + wstar.im * m};
  Var latent = ifft2_centered_real(embedded);
  if (s.c > 1) {
    const RealTensor source = scope == InjectionScope::kLastChannel ? zT : ifft2_centered_real(injected);
    std::vector<double> head(source.data().begin(), source.data().begin() + static_cast<std::ptrdiff_t>(last * s.plane()));
    const Var parts[] = {g.constant(RealTensor({last, s.h, s.w}, std::move(head))), latent};
    latent = join(parts);
  }
  const Var xhat = latent_to_image(ddim_generate(latent, *diffusion->predictor, diffusion->sched));
  const Var x0v = g.constant(x0);

  const Var l_mse = mse(xhat, x0v);
  const Var l_ssim = ssim(xhat, x0v);
  const Var l_p = perceptual.distance(xhat, x0);
  const ComplexTensor orig = spectrum.channel_tensor(last);
  const Var l_n = loss_n(CVar{g.constant(orig.real_part()), g.constant(orig.imag_part())}, wstar, mask);

  const Var total = scale(l_mse, weights.l2) + scale(l_ssim, -weights.ssim) + scale(l_p, weights.perceptual) +
                    scale(l_n, weights.spectral * spectral_multiplier()) +
                    g.constant(RealTensor({1, 1, 1}, weights.ssim));
  if (terms != nullptr) {
    terms->total = total.value()[0];
    terms->mse = l_mse.value()[0];
    terms->ssim_loss = 1.0 - l_ssim.value()[0];
    terms->perceptual = l_p.value()[0];
    terms->spectral = l_n.value()[0];
  }
  return total;
}

FlowLossTerms FlowObjective::evaluate(const FlowParams& params, const RealTensor& zT, const RealTensor& x0) const {
  Graph g;
  const FlowNetVars re = flow_net_vars(g, params.real, false);
  const FlowNetVars im = flow_net_vars(g, params.imag, false);
  FlowLossTerms terms;
  loss(re, im, zT, x0, &terms);
  return terms;
}

namespace {

double mean_objective(const FlowObjective& obj, const FlowParams& params, const std::vector<RealTensor>& zts,
                      const std::vector<RealTensor>& images) {
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) total += obj.evaluate(params, zts[i], images[i]).total;
  return total / static_cast<double>(images.size());
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

FlowTrainResult train_flow(const std::vector<RealTensor>& images, const Diffusion& diffusion, const TreeRingKey& key,
                           const FlowTrainConfig& cfg) {
  if (images.empty()) throw ConfigError("train_flow: dataset is empty");
  if (!diffusion.predictor) throw ConfigError("train_flow: no noise predictor loaded");
  if (cfg.batch == 0 || cfg.checkpoint_interval == 0) throw ConfigError("train_flow: batch and checkpoint interval must be positive");
  const auto& w = cfg.weights;
  if (w.l2 < 0 || w.ssim < 0 || w.perceptual < 0 || w.spectral < 0) throw ConfigError("train_flow: loss weights must be >= 0");
  const Shape s = images[0].shape();

  FlowObjective obj;
  obj.diffusion = &diffusion;
  obj.key = &key;
  obj.mask = circular_mask(s.h, s.w, cfg.radius);
  obj.scope = cfg.scope;
  obj.perceptual = PerceptualProxy::init(s.c, derive_seed(cfg.seed, 21));
  obj.weights = w;

  FlowConfig fc = cfg.flow;
  fc.channels = s.c;
  fc.h = s.h;
  fc.w = s.w;
  FlowTrainResult res;
  FlowParams params = FlowParams::init(fc, true);

  std::vector<RealTensor> zts;
  zts.reserve(images.size());
  for (const auto& img : images) zts.push_back(diffusion.invert(image_to_latent(img)));

  auto write_checkpoint = [&](const FlowParams& p, const FlowCheckpoint& ck, const std::string& name) {
    if (!cfg.output_dir) return;
    save_flow(*cfg.output_dir / name, p, {{"step", ck.step}, {"loss", ck.loss}, {"radius", cfg.radius},
                                          {"key_seed", key.seed}, {"lambda_n", w.spectral}});
  };

  res.initial_loss = mean_objective(obj, params, zts, images);
  res.best = params;
  res.best_checkpoint = {0, res.initial_loss};
  res.checkpoints.push_back(res.best_checkpoint);
  write_checkpoint(params, res.best_checkpoint, "flow_step0.json");

  auto tensors = params.tensors();
  Adam adam(cfg.adam, tensors);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t per_epoch = (images.size() + cfg.batch - 1) / cfg.batch;
  const std::size_t total_steps = per_epoch * cfg.epochs;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle(derive_seed(cfg.seed, 100 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::vector<RealTensor> grads;
      for (auto* t : tensors) grads.emplace_back(t->shape());
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        Graph g;
        const FlowNetVars re = flow_net_vars(g, params.real, true);
        const FlowNetVars im = flow_net_vars(g, params.imag, true);
        const Var l = scale(obj.loss(re, im, zts[order[k]], images[order[k]]), inv);
        batch_loss += l.value()[0];
        g.backward(l);
        std::size_t idx = 0;
        for (const FlowNetVars* net : {&re, &im})
          for (const auto& layers : net->blocks)
            for (const auto& [wv, bv] : layers) {
              for (const Var& v : {wv, bv}) {
                const RealTensor gv = g.grad(v);
                for (std::size_t i = 0; i < gv.size(); ++i) grads[idx][i] += gv[i];
                ++idx;
              }
            }
      }
      if (!std::isfinite(batch_loss)) throw TrainingError("flow loss is not finite at step " + std::to_string(step));
      adam.step(grads);
      spectral_normalize(params, cfg.power_iterations);
      ++step;
      res.log.push_back({step, batch_loss});
      if (step % cfg.checkpoint_interval == 0 || step == total_steps) {
        const FlowCheckpoint ck{step, mean_objective(obj, params, zts, images)};
        if (!std::isfinite(ck.loss)) throw TrainingError("flow checkpoint loss is not finite at step " + std::to_string(step));
        res.checkpoints.push_back(ck);
        write_checkpoint(params, ck, "flow_step" + std::to_string(step) + ".json");
        if (ck.loss < res.best_checkpoint.loss) {
          res.best_checkpoint = ck;
          res.best = params;
        }
      }
    }
  }
  res.steps = step;
  if (cfg.output_dir) {
    write_checkpoint(res.best, res.best_checkpoint, "flow_best.json");
    std::string csv = "step,loss\n";
    for (const auto& e : res.log) csv += std::to_string(e.step) + "," + format_double(e.loss) + "\n";
    write_file(*cfg.output_dir / "train_log.csv", csv);
  }
  return res;
}

}  // namespace wf
