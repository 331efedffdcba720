// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "waterflow/kernels.hpp"
#include "waterflow/tensor.hpp"

namespace wf {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; only valid while its graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  const RealTensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatmul,
  kConv2d,
  kActivation,
  kSum,
  kMean,
  kMse,
  kSsim,
  kSplit,
  kJoin,
  kMaskedSum,
};

/// Tape-based reverse-mode autodiff. Nodes are appended in creation order,
/// which is already a topological order, so backward walks the tape in
/// reverse exactly once.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(RealTensor value);
  /// Trainable leaf.
  Var parameter(RealTensor value);

  /// Populates adjoints for every node upstream of `output`, which must hold
  /// a single element. Can be called once per graph.
  void backward(Var output);

  /// dOutput/dv after backward(); zeros for nodes off the output's path.
  RealTensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const { return nodes_[v.id()].kind; }

  // Used by op implementations.
  using Backprop = std::function<void(Graph&, const RealTensor& upstream)>;
  Var record(OpKind kind, RealTensor value, std::vector<std::size_t> inputs, Backprop backprop);
  const RealTensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adjoint buffer of `id`, allocated on first use.
  RealTensor& adjoint(std::size_t id);

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    RealTensor value;
    RealTensor adjoint;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// (1,m,k) x (1,k,n)
Var matmul(Var a, Var b);
/// Stride-1, same-padding convolution; weights (out, in, k*k), bias (1,1,out) or invalid Var.
Var conv2d(Var x, Var weight, Var bias);
Var activate(Var x, kernels::Activation kind);
Var sum(Var x);
Var mean(Var x);
Var mse(Var a, Var b);
Var ssim(Var a, Var b);
/// Channels [first, first+count) of x.
Var split(Var x, std::size_t first, std::size_t count);
/// Concatenates along channels; all parts must share h and w.
Var join(std::span<const Var> parts);
/// Σ mask⊙x where mask is a 1×h×w plane applied to every channel.
Var masked_sum(Var x, const RealTensor& mask);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

/// Complex values in a graph as a pair of real nodes.
struct CVar {
  Var re;
  Var im;
};

}  // namespace wf
