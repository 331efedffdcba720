// SPDX-License-Identifier: Apache-2.0
#include "waterflow/flow.hpp"

#include <cmath>
#include <string>

#include "waterflow/error.hpp"
#include "waterflow/kernels.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/rng.hpp"

namespace wf {
namespace {

using kernels::Activation;
constexpr std::array<std::size_t, 3> kKernel{3, 1, 3};
constexpr std::size_t kInitIterations = 50;

double norm2(const RealTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

void scale_in_place(RealTensor& t, double s) {
  for (auto& v : t.data()) v *= s;
}

FlowNet make_net(const FlowConfig& cfg, Rng& rng, bool zero_last) {
  FlowNet net;
  const std::array<std::size_t, 3> in{cfg.channels, cfg.hidden, cfg.hidden};
  const std::array<std::size_t, 3> out{cfg.hidden, cfg.hidden, cfg.channels};
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    ResidualBlock block;
    for (std::size_t l = 0; l < 3; ++l) {
      auto& conv = block.convs[l];
      const std::size_t k = kKernel[l];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in[l] * k * k));
      conv.weight = RealTensor({out[l], in[l], k * k});
      conv.bias = RealTensor({1, 1, out[l]});
      if (!(zero_last && l == 2)) {
        for (auto& v : conv.weight.data()) v = rng.uniform(-bound, bound);
        for (auto& v : conv.bias.data()) v = rng.uniform(-bound, bound);
      }
      conv.u = rng.normal_tensor({in[l], cfg.h, cfg.w});
      scale_in_place(conv.u, 1.0 / norm2(conv.u));
    }
    net.blocks.push_back(std::move(block));
  }
  return net;
}

void check_input(const FlowNet& net, const Shape& s) {
  if (net.blocks.empty()) return;
  const auto expected = net.blocks[0].convs[0].weight.shape().h;
  if (s.c != expected) {
    throw DimensionError("flow expects " + std::to_string(expected) + " input channels, got " + std::to_string(s.c));
  }
}

}  // namespace

FlowParams FlowParams::init(const FlowConfig& cfg, bool zero_last) {
  if (cfg.blocks == 0 || cfg.hidden == 0 || cfg.channels == 0) throw ConfigError("flow: sizes must be positive");
  if (!(cfg.lipschitz > 0.0 && cfg.lipschitz < 1.0)) throw ConfigError("flow: lipschitz constant must be in (0,1)");
  FlowParams p;
  p.cfg = cfg;
  Rng rr(derive_seed(cfg.seed, 11)), ri(derive_seed(cfg.seed, 12));
  p.real = make_net(cfg, rr, zero_last);
  p.imag = make_net(cfg, ri, zero_last);
  spectral_normalize(p, kInitIterations);
  return p;
}

FlowParams FlowParams::identity(const FlowConfig& cfg) {
  FlowParams p = init(cfg, true);
  for (auto* t : p.tensors()) std::fill(t->data().begin(), t->data().end(), 0.0);
  return p;
}

std::vector<RealTensor*> FlowParams::tensors() {
  std::vector<RealTensor*> out;
  for (FlowNet* net : {&real, &imag})
    for (auto& b : net->blocks)
      for (auto& c : b.convs) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
      }
  return out;
}

std::vector<const RealTensor*> FlowParams::tensors() const {
  std::vector<const RealTensor*> out;
  for (const FlowNet* net : {&real, &imag})
    for (const auto& b : net->blocks)
      for (const auto& c : b.convs) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
      }
  return out;
}

std::vector<std::string> FlowParams::names() const {
  std::vector<std::string> out;
  for (const char* net : {"real", "imag"})
    for (std::size_t b = 0; b < cfg.blocks; ++b)
      for (std::size_t l = 0; l < 3; ++l) {
        const std::string base = std::string(net) + ".b" + std::to_string(b) + ".c" + std::to_string(l);
        out.push_back(base + ".w");
        out.push_back(base + ".b");
      }
  return out;
}

RealTensor residual_branch(const ResidualBlock& block, const RealTensor& x) {
  const auto& c = block.convs;
  RealTensor h = kernels::activate(Activation::kLipSwish, kernels::conv2d(x, c[0].weight, c[0].bias.data()));
  h = kernels::activate(Activation::kLipSwish, kernels::conv2d(h, c[1].weight, c[1].bias.data()));
  return kernels::conv2d(h, c[2].weight, c[2].bias.data());
}

RealTensor apply_net(const FlowNet& net, const RealTensor& x) {
  check_input(net, x.shape());
  RealTensor y = x;
  for (const auto& block : net.blocks) {
    const RealTensor g = residual_branch(block, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += g[i];
  }
  return y;
}

ComplexTensor apply_flow(const ComplexTensor& spectrum, const FlowParams& params) {
  const auto& s = spectrum.shape();
  const RealTensor re = apply_net(params.real, spectrum.real_part()).channel_tensor(s.c - 1);
  const RealTensor im = apply_net(params.imag, spectrum.imag_part()).channel_tensor(s.c - 1);
  return ComplexTensor({1, s.h, s.w}, re.vec(), im.vec());
}

RealTensor invert_net(const FlowNet& net, const RealTensor& y, std::size_t max_iter, double tol) {
  check_input(net, y.shape());
  RealTensor target = y;
  for (std::size_t b = net.blocks.size(); b-- > 0;) {
    RealTensor x = target;
    bool converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
      const RealTensor g = residual_branch(net.blocks[b], x);
      double delta = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double next = target[i] - g[i];
        if (!std::isfinite(next)) throw NumericError("invert_net: iteration diverged in block " + std::to_string(b));
        delta = std::max(delta, std::abs(next - x[i]));
        x[i] = next;
      }
      if (delta <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericError("invert_net: block " + std::to_string(b) + " did not converge in " +
                         std::to_string(max_iter) + " iterations (Lipschitz bound violated?)");
    }
    target = std::move(x);
  }
  return target;
}

double power_iteration(FlowConv& conv, std::size_t h, std::size_t w, std::size_t iterations) {
  const std::size_t in = conv.weight.shape().h;
  if (conv.u.shape() != Shape{in, h, w}) {
    Rng rng(derive_seed(in, h * 131 + w));
    conv.u = rng.normal_tensor({in, h, w});
    scale_in_place(conv.u, 1.0 / norm2(conv.u));
  }
  double sigma = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    RealTensor v = kernels::conv2d(conv.u, conv.weight, {});
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    scale_in_place(v, 1.0 / nv);
    RealTensor u = kernels::conv2d_grad_input(v, conv.weight);
    sigma = norm2(u);
    if (sigma == 0.0) return 0.0;
    scale_in_place(u, 1.0 / sigma);
    conv.u = std::move(u);
  }
  return sigma;
}

void spectral_normalize(FlowNet& net, const FlowConfig& cfg, std::size_t iterations) {
  if (iterations == 0) throw ContractError("spectral_normalize: iterations must be >= 1");
  for (auto& block : net.blocks) {
    for (auto& conv : block.convs) {
      const double sigma = power_iteration(conv, cfg.h, cfg.w, iterations);
      if (sigma > cfg.lipschitz) scale_in_place(conv.weight, cfg.lipschitz / sigma);
    }
  }
}

void spectral_normalize(FlowParams& params, std::size_t iterations) {
  spectral_normalize(params.real, params.cfg, iterations);
  spectral_normalize(params.imag, params.cfg, iterations);
}

double loss_n(const ComplexTensor& spectrum_plane, const ComplexTensor& wstar, const CircularMask& mask) {
  require_same_shape(spectrum_plane.shape(), wstar.shape(), "loss_n");
  if (wstar.shape() != Shape{1, mask.h, mask.w}) throw DimensionError("loss_n: expects planes matching the mask");
  double s = 0.0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    const double dr = spectrum_plane.re()[i] - wstar.re()[i];
    const double di = spectrum_plane.im()[i] - wstar.im()[i];
    s += dr * dr + di * di;
  }
  return -s / static_cast<double>(mask.h * mask.w);
}

FlowNetVars flow_net_vars(Graph& g, const FlowNet& net, bool trainable) {
  FlowNetVars v;
  for (const auto& block : net.blocks) {
    std::array<std::pair<Var, Var>, 3> layers;
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& c = block.convs[l];
      layers[l] = trainable ? std::pair{g.parameter(c.weight), g.parameter(c.bias)}
                            : std::pair{g.constant(c.weight), g.constant(c.bias)};
    }
    v.blocks.push_back(layers);
  }
  return v;
}

Var apply_net(const FlowNetVars& net, Var x) {
  for (const auto& layers : net.blocks) {
    Var h = activate(conv2d(x, layers[0].first, layers[0].second), Activation::kLipSwish);
    h = activate(conv2d(h, layers[1].first, layers[1].second), Activation::kLipSwish);
    h = conv2d(h, layers[2].first, layers[2].second);
    x = x + h;
  }
  return x;
}

CVar apply_flow(CVar spectrum, const FlowNetVars& real, const FlowNetVars& imag) {
  const std::size_t last = spectrum.re.shape().c - 1;
  return {split(apply_net(real, spectrum.re), last, 1), split(apply_net(imag, spectrum.im), last, 1)};
}

Var loss_n(CVar spectrum_plane, CVar wstar, const CircularMask& mask) {
  const Var dr = spectrum_plane.re - wstar.re;
  const Var di = spectrum_plane.im - wstar.im;
  const Var s = masked_sum(dr * dr + di * di, mask.bits);
  return scale(s, -1.0 / static_cast<double>(mask.h * mask.w));
}

void save_flow(const std::filesystem::path& manifest, const FlowParams& params, const nlohmann::json& extra) {
  TensorBundle b;
  b.metadata = extra;
  b.metadata["kind"] = "flow";
  b.metadata["K"] = params.cfg.blocks;
  b.metadata["hidden"] = params.cfg.hidden;
  b.metadata["channels"] = params.cfg.channels;
  b.metadata["lipschitz_const"] = params.cfg.lipschitz;
  b.metadata["seed"] = params.cfg.seed;
  b.metadata["plane"] = {params.cfg.h, params.cfg.w};
  for (const char* name : {"real", "imag"}) {
    const FlowNet& net = std::string(name) == "real" ? params.real : params.imag;
    for (std::size_t k = 0; k < net.blocks.size(); ++k)
      for (std::size_t l = 0; l < 3; ++l) {
        const std::string base = std::string(name) + ".b" + std::to_string(k) + ".c" + std::to_string(l);
        const auto& c = net.blocks[k].convs[l];
        b.tensors.emplace_back(base + ".w", c.weight);
        b.tensors.emplace_back(base + ".b", c.bias);
        b.tensors.emplace_back(base + ".u", c.u);
      }
  }
  save_bundle(manifest, b);
}

FlowParams load_flow(const std::filesystem::path& manifest, nlohmann::json* metadata) {
  const TensorBundle b = load_bundle(manifest);
  if (b.metadata.value("kind", "") != "flow") throw ConfigError(manifest.string() + " is not a flow checkpoint");
  FlowConfig cfg;
  cfg.blocks = b.metadata.at("K").get<std::size_t>();
  cfg.hidden = b.metadata.at("hidden").get<std::size_t>();
  cfg.channels = b.metadata.at("channels").get<std::size_t>();
  cfg.lipschitz = b.metadata.at("lipschitz_const").get<double>();
  cfg.seed = b.metadata.at("seed").get<std::uint64_t>();
  cfg.h = b.metadata.at("plane")[0].get<std::size_t>();
  cfg.w = b.metadata.at("plane")[1].get<std::size_t>();
  FlowParams p;
  p.cfg = cfg;
  for (const char* name : {"real", "imag"}) {
    FlowNet& net = std::string(name) == "real" ? p.real : p.imag;
    net.blocks.resize(cfg.blocks);
    for (std::size_t k = 0; k < cfg.blocks; ++k)
      for (std::size_t l = 0; l < 3; ++l) {
        const std::string base = std::string(name) + ".b" + std::to_string(k) + ".c" + std::to_string(l);
        auto& c = net.blocks[k].convs[l];
        c.weight = b.get(base + ".w");
        c.bias = b.get(base + ".b");
        c.u = b.get(base + ".u");
      }
  }
  if (metadata != nullptr) *metadata = b.metadata;
  return p;
}

}  // namespace wf
