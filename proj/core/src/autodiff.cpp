// SPDX-License-Identifier: Apache-2.0
#include "waterflow/autodiff.hpp"

#include <string>

#include "waterflow/error.hpp"

namespace wf {

const RealTensor& Var::value() const { return graph_->value(id_); }
bool Var::requires_grad() const { return graph_->requires_grad(id_); }

Var Graph::constant(RealTensor value) {
  nodes_.push_back(Node{OpKind::kLeaf, std::move(value), {}, false, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(RealTensor value) {
  nodes_.push_back(Node{OpKind::kLeaf, std::move(value), {}, true, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Graph::record(OpKind kind, RealTensor value, std::vector<std::size_t> inputs, Backprop backprop) {
  bool rg = false;
  for (auto i : inputs) rg = rg || nodes_[i].requires_grad;
  nodes_.push_back(Node{kind, std::move(value), {}, rg, std::move(inputs), rg ? std::move(backprop) : Backprop{}});
  return {this, nodes_.size() - 1};
}

RealTensor& Graph::adjoint(std::size_t id) {
  auto& n = nodes_[id];
  if (n.adjoint.empty()) n.adjoint = RealTensor(n.value.shape());
  return n.adjoint;
}

void Graph::backward(Var output) {
  if (output.graph() != this) throw ContractError("backward: output belongs to another graph");
  if (nodes_[output.id()].value.size() != 1) {
    throw ContractError("backward: output must be scalar, has shape " + to_string(output.shape()));
  }
  if (backward_done_) throw ContractError("backward: already called on this graph");
  backward_done_ = true;
  adjoint(output.id())[0] = 1.0;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.adjoint.empty() || !n.backprop) continue;
    n.backprop(*this, n.adjoint);
  }
}

RealTensor Graph::grad(Var v) const {
  const auto& n = nodes_[v.id()];
  if (n.adjoint.empty()) return RealTensor(n.value.shape());
  return n.adjoint;
}

namespace {

Graph& same_graph(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || a.graph() != b.graph()) throw ContractError(std::string(op) + ": operands from different graphs");
  return *a.graph();
}

void accumulate(Graph& g, std::size_t id, const RealTensor& delta, double factor = 1.0) {
  if (!g.requires_grad(id)) return;
  auto& adj = g.adjoint(id);
  for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += factor * delta[i];
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b, "add");
  require_same_shape(a.shape(), b.shape(), "add");
  RealTensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kAdd, std::move(out), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    accumulate(gr, ia, up);
    accumulate(gr, ib, up);
  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b, "sub");
  require_same_shape(a.shape(), b.shape(), "sub");
  RealTensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kSub, std::move(out), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    accumulate(gr, ia, up);
    accumulate(gr, ib, up, -1.0);
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b, "mul");
  require_same_shape(a.shape(), b.shape(), "mul");
  RealTensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kMul, std::move(out), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    const auto& va = gr.value(ia);
    const auto& vb = gr.value(ib);
    if (gr.requires_grad(ia)) {
      auto& adj = gr.adjoint(ia);
      for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += up[i] * vb[i];
    }
    if (gr.requires_grad(ib)) {
      auto& adj = gr.adjoint(ib);
      for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += up[i] * va[i];
    }
  });
}

Var scale(Var a, double s) {
  RealTensor out = a.value();
  for (auto& v : out.data()) v *= s;
  const auto ia = a.id();
  return a.graph()->record(OpKind::kScale, std::move(out), {ia},
                           [ia, s](Graph& gr, const RealTensor& up) { accumulate(gr, ia, up, s); });
}

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b, "matmul");
  RealTensor out = kernels::matmul(a.value(), b.value());
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kMatmul, std::move(out), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    if (gr.requires_grad(ia)) accumulate(gr, ia, kernels::matmul(up, kernels::transpose(gr.value(ib))));
    if (gr.requires_grad(ib)) accumulate(gr, ib, kernels::matmul(kernels::transpose(gr.value(ia)), up));
  });
}

Var conv2d(Var x, Var weight, Var bias) {
  Graph& g = same_graph(x, weight, "conv2d");
  const bool has_bias = bias.valid();
  if (has_bias) {
    same_graph(x, bias, "conv2d");
    if (bias.value().size() != weight.shape().c) throw DimensionError("conv2d: bias length mismatch");
  }
  RealTensor out = kernels::conv2d(x.value(), weight.value(),
                                   has_bias ? bias.value().data() : std::span<const double>{});
  const auto ix = x.id(), iw = weight.id();
  const std::size_t ib = has_bias ? bias.id() : 0;
  std::vector<std::size_t> inputs{ix, iw};
  if (has_bias) inputs.push_back(ib);
  return g.record(OpKind::kConv2d, std::move(out), std::move(inputs),
                  [ix, iw, ib, has_bias](Graph& gr, const RealTensor& up) {
                    if (gr.requires_grad(ix)) accumulate(gr, ix, kernels::conv2d_grad_input(up, gr.value(iw)));
                    const bool wg = gr.requires_grad(iw);
                    const bool bg = has_bias && gr.requires_grad(ib);
                    if (!wg && !bg) return;
                    RealTensor gw(gr.value(iw).shape());
                    std::vector<double> gb(bg ? gr.value(iw).shape().c : 0, 0.0);
                    if (wg) {
                      kernels::conv2d_grad_params(up, gr.value(ix), gw, gb);
                      accumulate(gr, iw, gw);
                    } else {
                      const auto& s = up.shape();
                      for (std::size_t c = 0; c < s.c; ++c)
                        for (std::size_t i = 0; i < s.plane(); ++i) gb[c] += up[c * s.plane() + i];
                    }
                    if (bg) {
                      auto& adj = gr.adjoint(ib);
                      for (std::size_t c = 0; c < gb.size(); ++c) adj[c] += gb[c];
                    }
                  });
}

Var activate(Var x, kernels::Activation kind) {
  RealTensor out = kernels::activate(kind, x.value());
  const auto ix = x.id();
  return x.graph()->record(OpKind::kActivation, std::move(out), {ix}, [ix, kind](Graph& gr, const RealTensor& up) {
    const auto& v = gr.value(ix);
    auto& adj = gr.adjoint(ix);
    for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += up[i] * kernels::activate_derivative(kind, v[i]);
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const auto ix = x.id();
  return x.graph()->record(OpKind::kSum, RealTensor({1, 1, 1}, s), {ix}, [ix](Graph& gr, const RealTensor& up) {
    for (auto& a : gr.adjoint(ix).data()) a += up[0];
  });
}

Var mean(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const double n = static_cast<double>(x.value().size());
  const auto ix = x.id();
  return x.graph()->record(OpKind::kMean, RealTensor({1, 1, 1}, s / n), {ix},
                           [ix, n](Graph& gr, const RealTensor& up) {
                             for (auto& a : gr.adjoint(ix).data()) a += up[0] / n;
                           });
}

Var mse(Var a, Var b) {
  Graph& g = same_graph(a, b, "mse");
  const double v = kernels::mse(a.value(), b.value());
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kMse, RealTensor({1, 1, 1}, v), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    const auto& va = gr.value(ia);
    const auto& vb = gr.value(ib);
    RealTensor d(va.shape());
    const double k = 2.0 / static_cast<double>(va.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = k * (va[i] - vb[i]);
    accumulate(gr, ia, d, up[0]);
    accumulate(gr, ib, d, -up[0]);
  });
}

Var ssim(Var a, Var b) {
  Graph& g = same_graph(a, b, "ssim");
  const double v = kernels::ssim(a.value(), b.value());
  const auto ia = a.id(), ib = b.id();
  return g.record(OpKind::kSsim, RealTensor({1, 1, 1}, v), {ia, ib}, [ia, ib](Graph& gr, const RealTensor& up) {
    // SSIM is symmetric, so the gradient in b is ssim_grad with roles swapped.
    if (gr.requires_grad(ia)) accumulate(gr, ia, kernels::ssim_grad(gr.value(ia), gr.value(ib), up[0]));
    if (gr.requires_grad(ib)) accumulate(gr, ib, kernels::ssim_grad(gr.value(ib), gr.value(ia), up[0]));
  });
}

Var split(Var x, std::size_t first, std::size_t count) {
  const auto& s = x.shape();
  if (count == 0 || first + count > s.c) throw DimensionError("split: channel range out of bounds");
  RealTensor out({count, s.h, s.w});
  const auto src = x.value().data().subspan(first * s.plane(), count * s.plane());
  std::copy(src.begin(), src.end(), out.data().begin());
  const auto ix = x.id();
  const std::size_t offset = first * s.plane();
  return x.graph()->record(OpKind::kSplit, std::move(out), {ix}, [ix, offset](Graph& gr, const RealTensor& up) {
    auto& adj = gr.adjoint(ix);
    for (std::size_t i = 0; i < up.size(); ++i) adj[offset + i] += up[i];
  });
}

Var join(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("join: no inputs");
  Graph* g = parts[0].graph();
  const auto h = parts[0].shape().h, w = parts[0].shape().w;
  std::size_t channels = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    if (p.graph() != g) throw ContractError("join: operands from different graphs");
    if (p.shape().h != h || p.shape().w != w) throw DimensionError("join: plane sizes differ");
    channels += p.shape().c;
    ids.push_back(p.id());
  }
  RealTensor out({channels, h, w});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += p.value().size();
  }
  return g->record(OpKind::kJoin, std::move(out), ids, [ids](Graph& gr, const RealTensor& up) {
    std::size_t offset = 0;
    for (auto id : ids) {
      const std::size_t n = gr.value(id).size();
      if (gr.requires_grad(id)) {
        auto& adj = gr.adjoint(id);
        for (std::size_t i = 0; i < n; ++i) adj[i] += up[offset + i];
      }
      offset += n;
    }
  });
}

Var masked_sum(Var x, const RealTensor& mask) {
  const auto& s = x.shape();
  if (mask.shape() != Shape{1, s.h, s.w}) throw DimensionError("masked_sum: mask must be 1×h×w");
  double total = 0.0;
  for (std::size_t c = 0; c < s.c; ++c)
    for (std::size_t i = 0; i < s.plane(); ++i) total += mask[i] * x.value()[c * s.plane() + i];
  const auto ix = x.id();
  return x.graph()->record(OpKind::kMaskedSum, RealTensor({1, 1, 1}, total), {ix},
                           [ix, mask](Graph& gr, const RealTensor& up) {
                             auto& adj = gr.adjoint(ix);
                             const std::size_t plane = mask.size();
                             for (std::size_t i = 0; i < adj.size(); ++i) adj[i] += up[0] * mask[i % plane];
                           });
}

}  // namespace wf
