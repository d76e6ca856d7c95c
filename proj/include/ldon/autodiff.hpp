#pragma once

// Reverse-mode automatic differentiation over ldon::Tensor.
//
// A Tape records every operation of one forward pass in topological order.
// Var is a lightweight handle (tape pointer + node id); the Tape must outlive
// every Var it hands out. One tape per forward/backward pass.

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ldon/tensor.hpp"

namespace ldon {

enum class OpKind {
  leaf,
  add,
  sub,
  mul,
  matmul,
  conv2d,
  reshape,
  reduce_mean,
  relu,
  sigmoid,
  sine,
  permute,
  channel_affine,
  spectral_conv2d,
};

std::string_view op_name(OpKind kind);

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Result of Tape::backward. Nodes that the loss does not depend on report
/// zero gradients.
class Gradients {
 public:
  Tensor operator[](const Var& v) const { return at(v.id()); }
  Tensor at(std::size_t node) const;
  bool reached(std::size_t node) const { return node < grads_.size() && !grads_[node].empty(); }

 private:
  friend class Tape;
  std::vector<Shape> shapes_;
  std::vector<std::vector<double>> grads_;
};

class Tape {
 public:
  /// Receives d(loss)/d(output) and accumulates into the input gradient
  /// buffers. A null buffer means that input needs no gradient.
  using Backward = std::function<void(std::span<const double> out_grad, std::span<double* const> in_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  Var record(OpKind kind, std::span<const Var> inputs, Tensor value, Backward backward);

  Gradients backward(const Var& loss) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    Backward backward;
    bool requires_grad;
  };
  Var push_leaf(Tensor value, bool requires_grad);

  std::vector<Node> nodes_;
};

/// Extra attributes for ops that need them (reshape target, permute axes).
struct OpAttrs {
  Shape shape;
  std::vector<std::size_t> axes;
};

/// Generic entry point: dispatches to the typed functions below. conv2d takes
/// two or three inputs (input, kernel[, bias]).
Var forward_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

// Element-wise binary ops. Shapes must match, or one operand's shape must be a
// trailing suffix of the other's (rank-0 scalars included); the smaller one is
// broadcast.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

/// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);

/// input [B,C,H,W], kernel [O,C,KH,KW] with odd KH, KW; stride 1, zero padding
/// that preserves H and W. Optional bias [O].
Var conv2d(const Var& input, const Var& kernel);
Var conv2d(const Var& input, const Var& kernel, const Var& bias);

Var reshape(const Var& a, Shape shape);
/// Mean of all elements, shape [].
Var reduce_mean(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var sine(const Var& a);
Var permute(const Var& a, std::vector<std::size_t> axes);

/// y[b,c,...] = x[b,c,...] * scale[c] + shift[c]; scale and shift are
/// constants (no gradient). x has rank >= 2 with channels on axis 1.
Var channel_affine(const Var& x, std::span<const double> scale, std::span<const double> shift);

}  // namespace ldon
