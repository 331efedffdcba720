// SPDX-License-Identifier: Apache-2.0
#include "waterflow/denoiser.hpp"

#include <cmath>

#include "waterflow/diffusion.hpp"
#include "waterflow/error.hpp"
#include "waterflow/kernels.hpp"
#include "waterflow/optim.hpp"
#include "waterflow/rng.hpp"

namespace wf {

RealTensor ZeroPredictor::predict(const RealTensor& x, std::size_t) const { return RealTensor(x.shape()); }

Var ZeroPredictor::predict(Var x, std::size_t) const { return scale(x, 0.0); }

RealTensor LinearPredictor::predict(const RealTensor& x, std::size_t) const {
  RealTensor out = x;
  for (auto& v : out.data()) v *= a_;
  return out;
}

Var LinearPredictor::predict(Var x, std::size_t) const { return scale(x, a_); }

namespace {

RealTensor uniform_tensor(Rng& rng, Shape s, double bound) {
  RealTensor t(s);
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

void fill_conv(Rng& rng, RealTensor& w, RealTensor& b, std::size_t out, std::size_t in, std::size_t k) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
  w = uniform_tensor(rng, {out, in, k * k}, bound);
  b = uniform_tensor(rng, {1, 1, out}, bound);
}

void fill_linear(Rng& rng, RealTensor& w, RealTensor& b, std::size_t in, std::size_t out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w = uniform_tensor(rng, {1, in, out}, bound);
  b = uniform_tensor(rng, {1, 1, out}, bound);
}

}  // namespace

ConvNetParams ConvNetParams::init(const ConvNetConfig& cfg, std::uint64_t seed) {
  if (cfg.embed_dim % 2 != 0 || cfg.embed_dim == 0) throw ConfigError("embed_dim must be even and positive");
  Rng rng(seed);
  ConvNetParams p;
  p.cfg = cfg;
  fill_conv(rng, p.c1_w, p.c1_b, cfg.hidden, cfg.channels, 3);
  fill_conv(rng, p.c2_w, p.c2_b, cfg.hidden, cfg.hidden, 3);
  fill_conv(rng, p.c3_w, p.c3_b, cfg.channels, cfg.hidden, 3);
  fill_linear(rng, p.p1_w, p.p1_b, cfg.embed_dim, cfg.hidden);
  fill_linear(rng, p.p2_w, p.p2_b, cfg.embed_dim, cfg.hidden);
  return p;
}

std::vector<RealTensor*> ConvNetParams::tensors() {
  return {&c1_w, &c1_b, &c2_w, &c2_b, &c3_w, &c3_b, &p1_w, &p1_b, &p2_w, &p2_b};
}

std::vector<const RealTensor*> ConvNetParams::tensors() const {
  return {&c1_w, &c1_b, &c2_w, &c2_b, &c3_w, &c3_b, &p1_w, &p1_b, &p2_w, &p2_b};
}

std::vector<std::string> ConvNetParams::names() const {
  return {"c1.w", "c1.b", "c2.w", "c2.b", "c3.w", "c3.b", "p1.w", "p1.b", "p2.w", "p2.b"};
}

RealTensor timestep_embedding(std::size_t t, std::size_t dim, std::size_t T) {
  const std::size_t half = dim / 2;
  RealTensor e({1, 1, dim});
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(1000.0) * static_cast<double>(i) / static_cast<double>(half));
    const double arg = static_cast<double>(t) * freq * (1000.0 / static_cast<double>(T));
    e[i] = std::sin(arg);
    e[half + i] = std::cos(arg);
  }
  return e;
}

namespace {

// bias + e·P + pb, as a flat vector.
std::vector<double> time_bias(const RealTensor& conv_b, const RealTensor& emb, const RealTensor& pw,
                              const RealTensor& pb) {
  const RealTensor proj = kernels::matmul(emb, pw);
  std::vector<double> b(conv_b.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = conv_b[i] + proj[i] + pb[i];
  return b;
}

}  // namespace

RealTensor ConvNetPredictor::predict(const RealTensor& x, std::size_t t) const {
  using kernels::Activation;
  const auto& p = params_;
  if (x.shape().c != p.cfg.channels) throw DimensionError("convnet: expected " + std::to_string(p.cfg.channels) +
                                                          " channels, got " + std::to_string(x.shape().c));
  const RealTensor emb = timestep_embedding(t, p.cfg.embed_dim, p.cfg.T);
  const auto b1 = time_bias(p.c1_b, emb, p.p1_w, p.p1_b);
  const auto b2 = time_bias(p.c2_b, emb, p.p2_w, p.p2_b);
  RealTensor h = kernels::activate(Activation::kSiLU, kernels::conv2d(x, p.c1_w, b1));
  h = kernels::activate(Activation::kSiLU, kernels::conv2d(h, p.c2_w, b2));
  return kernels::conv2d(h, p.c3_w, p.c3_b.data());
}

Var convnet_forward(const ConvNetVars& v, Var x, std::size_t t, const ConvNetConfig& cfg) {
  using kernels::Activation;
  Graph& g = *x.graph();
  const Var emb = g.constant(timestep_embedding(t, cfg.embed_dim, cfg.T));
  const Var b1 = v.c1_b + matmul(emb, v.p1_w) + v.p1_b;
  const Var b2 = v.c2_b + matmul(emb, v.p2_w) + v.p2_b;
  Var h = activate(conv2d(x, v.c1_w, b1), Activation::kSiLU);
  h = activate(conv2d(h, v.c2_w, b2), Activation::kSiLU);
  return conv2d(h, v.c3_w, v.c3_b);
}

Var ConvNetPredictor::predict(Var x, std::size_t t) const {
  using kernels::Activation;
  const auto& p = params_;
  Graph& g = *x.graph();
  // Parameters are constants here, so fold the timestep bias numerically.
  const RealTensor emb = timestep_embedding(t, p.cfg.embed_dim, p.cfg.T);
  const auto b1 = time_bias(p.c1_b, emb, p.p1_w, p.p1_b);
  const auto b2 = time_bias(p.c2_b, emb, p.p2_w, p.p2_b);
  const Var w1 = g.constant(p.c1_w), w2 = g.constant(p.c2_w), w3 = g.constant(p.c3_w);
  const Var v1 = g.constant(RealTensor({1, 1, b1.size()}, b1));
  const Var v2 = g.constant(RealTensor({1, 1, b2.size()}, b2));
  const Var v3 = g.constant(p.c3_b);
  Var h = activate(conv2d(x, w1, v1), Activation::kSiLU);
  h = activate(conv2d(h, w2, v2), Activation::kSiLU);
  return conv2d(h, w3, v3);
}

namespace {

struct Sample {
  std::size_t index;
  std::size_t t;
  RealTensor eps;
};

Sample draw(Rng& rng, std::size_t n, std::size_t T, const Shape& shape) {
  Sample s;
  s.index = static_cast<std::size_t>(rng.below(n));
  s.t = static_cast<std::size_t>(rng.below(T));
  s.eps = rng.normal_tensor(shape);
  return s;
}

}  // namespace

double denoiser_loss(const ConvNetParams& params, const std::vector<RealTensor>& images, const NoiseSchedule& sched,
                     std::uint64_t seed, std::size_t draws) {
  if (images.empty()) throw ConfigError("denoiser_loss: empty dataset");
  Rng rng(seed);
  const ConvNetPredictor pred(params);
  double total = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const Sample s = draw(rng, images.size(), sched.T, images[0].shape());
    const RealTensor xt = forward_noise(image_to_latent(images[s.index]), s.t + 1, s.eps, sched);
    total += kernels::mse(pred.predict(xt, s.t), s.eps);
  }
  return total / static_cast<double>(draws);
}

DenoiserTrainResult train_denoiser(const std::vector<RealTensor>& images, const NoiseSchedule& sched,
                                   const DenoiserTrainConfig& cfg) {
  if (images.empty()) throw ConfigError("train_denoiser: dataset is empty");
  if (cfg.batch == 0) throw ConfigError("train_denoiser: batch must be positive");
  ConvNetConfig net;
  net.channels = images[0].shape().c;
  net.hidden = cfg.hidden;
  net.T = sched.T;
  DenoiserTrainResult result;
  result.params = ConvNetParams::init(net, derive_seed(cfg.seed, 1));
  std::vector<RealTensor> latents;
  for (const auto& img : images) latents.push_back(image_to_latent(img));

  const std::uint64_t eval_seed = derive_seed(cfg.seed, 3);
  const std::size_t eval_draws = 64;
  result.initial_loss = denoiser_loss(result.params, images, sched, eval_seed, eval_draws);

  auto tensors = result.params.tensors();
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, tensors);
  Rng rng(derive_seed(cfg.seed, 2));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<RealTensor> grads;
    for (auto* t : tensors) grads.emplace_back(t->shape());
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const Sample s = draw(rng, latents.size(), sched.T, latents[0].shape());
      Graph g;
      std::vector<Var> leaves;
      for (auto* t : tensors) leaves.push_back(g.parameter(*t));
      const ConvNetVars v{leaves[0], leaves[1], leaves[2], leaves[3], leaves[4],
                          leaves[5], leaves[6], leaves[7], leaves[8], leaves[9]};
      const Var x = g.constant(forward_noise(latents[s.index], s.t + 1, s.eps, sched));
      const Var loss = scale(mse(convnet_forward(v, x, s.t, net), g.constant(s.eps)), 1.0 / static_cast<double>(cfg.batch));
      batch_loss += loss.value()[0];
      g.backward(loss);
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        const RealTensor gk = g.grad(leaves[k]);
        for (std::size_t i = 0; i < gk.size(); ++i) grads[k][i] += gk[i];
      }
    }
    if (!std::isfinite(batch_loss)) throw TrainingError("denoiser loss is not finite at step " + std::to_string(step));
    result.loss_history.push_back(batch_loss);
    adam.step(grads);
  }
  result.final_loss = denoiser_loss(result.params, images, sched, eval_seed, eval_draws);
  if (!std::isfinite(result.final_loss)) throw TrainingError("denoiser diverged after training");
  return result;
}

void save_denoiser(const std::filesystem::path& manifest, const ConvNetParams& params, const NoiseSchedule& sched,
                   const nlohmann::json& extra) {
  TensorBundle b;
  b.metadata = extra;
  b.metadata["kind"] = "convnet";
  b.metadata["channels"] = params.cfg.channels;
  b.metadata["hidden"] = params.cfg.hidden;
  b.metadata["embed_dim"] = params.cfg.embed_dim;
  b.metadata["T"] = params.cfg.T;
  b.metadata["beta"] = sched.beta;
  const auto names = params.names();
  const auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) b.tensors.emplace_back(names[i], *ts[i]);
  save_bundle(manifest, b);
}

ConvNetParams load_denoiser(const std::filesystem::path& manifest, NoiseSchedule* sched) {
  const TensorBundle b = load_bundle(manifest);
  if (b.metadata.value("kind", "") != "convnet") throw ConfigError(manifest.string() + " is not a denoiser checkpoint");
  ConvNetParams p;
  p.cfg.channels = b.metadata.at("channels").get<std::size_t>();
  p.cfg.hidden = b.metadata.at("hidden").get<std::size_t>();
  p.cfg.embed_dim = b.metadata.at("embed_dim").get<std::size_t>();
  p.cfg.T = b.metadata.at("T").get<std::size_t>();
  const auto names = p.names();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) *ts[i] = b.get(names[i]);
  if (sched != nullptr) *sched = make_schedule(b.metadata.at("beta").get<std::vector<double>>());
  return p;
}

}  // namespace wf
