// Copyright 2026 The flowmotion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fm/numeric/tensor.hpp"

namespace fm::nc {

/// A trainable array. `grad` always has the same shape as `value`.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

template <typename T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  int32_t id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor<T>& value() const { return tape->value(id); }
  const Shape& shape() const { return tape->value(id).shape; }
};

/// Ordered record of executed operations. Nodes are appended in execution
/// order, so reverse iteration visits every node after all its consumers.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int32_t self)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  size_t size() const { return nodes_.size(); }

  Var<T> constant(Tensor<T> v) { return push("constant", std::move(v), false, nullptr); }

  /// Differentiable leaf owned by the tape; read its gradient with grad_of().
  Var<T> input(Tensor<T> v) { return push("input", std::move(v), record_, nullptr); }

  /// Leaf bound to external storage. Gradients accumulate into `p.grad`.
  /// Registering the same parameter twice returns the same node.
  Var<T> parameter(Parameter<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>{this, it->second};
    Var<T> v = push("parameter", Tensor<T>{}, record_, nullptr);
    nodes_.back().param = &p;
    param_nodes_.emplace(&p, v.id);
    return v;
  }

  /// Appends an op result. `fn` is dropped when no input needs a gradient.
  Var<T> record(const char* op, Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (in.tape != this) throw ShapeError(std::string(op) + ": operand recorded on a different tape");
      needs = needs || nodes_[static_cast<size_t>(in.id)].requires_grad;
    }
    needs = needs && record_;
    return push(op, std::move(value), needs, needs ? std::move(fn) : nullptr);
  }

  const Tensor<T>& value(int32_t id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.param ? n.param->value : n.value;
  }
  const Tensor<T>& value(Var<T> v) const { return value(v.id); }

  bool requires_grad(int32_t id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  const char* op_name(int32_t id) const { return nodes_[static_cast<size_t>(id)].op; }

  /// Mutable gradient buffer for a node, zero-initialised on first access.
  std::span<T> grad(int32_t id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.param) return n.param->grad.data;
    if (n.grad.empty()) n.grad.assign(static_cast<size_t>(value(id).size()), T(0));
    return n.grad;
  }

  /// Gradient of a tape-owned input leaf after backward(); zeros if unreached.
  std::vector<T> grad_of(Var<T> v) {
    auto g = grad(v.id);
    return std::vector<T>(g.begin(), g.end());
  }

  void backward(Var<T> loss) {
    if (loss.tape != this) throw ShapeError("backward: loss recorded on a different tape");
    if (numel(value(loss.id).shape) != 1)
      throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(value(loss.id).shape));
    if (backward_done_) throw std::logic_error("backward: tape already replayed");
    backward_done_ = true;
    if (!requires_grad(loss.id)) return;
    grad(loss.id)[0] += T(1);
    for (int32_t id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, id);
    }
  }

 private:
  struct Node {
    const char* op = "";
    Tensor<T> value;
    Parameter<T>* param = nullptr;
    std::vector<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(const char* op, Tensor<T> value, bool needs_grad, BackwardFn fn) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.requires_grad = needs_grad;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var<T>{this, static_cast<int32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int32_t> param_nodes_;
  bool record_;
  bool backward_done_ = false;
};

}  // namespace fm::nc
