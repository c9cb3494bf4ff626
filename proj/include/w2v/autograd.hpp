// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "w2v/tensor.hpp"

namespace w2v {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the dynamic computation graph. `backward` reads `grad` and
/// accumulates into the gradients of `inputs`.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer();
};

/// Handle to a graph node. Copies share the node.
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor value, bool requires_grad = false);

  /// Records an operation. If gradient recording is disabled or no input
  /// requires a gradient, the result is a constant leaf.
  static Variable make(Tensor value, const std::vector<Variable>& inputs, std::function<void(Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad() { return node_->grad_buffer(); }
  void zero_grad();

  /// Reverse-mode sweep from a scalar (or with an explicit seed gradient).
  void backward() const;
  void backward(const Tensor& seed) const;

  Variable detach() const { return Variable(node_->value, false); }
  Node* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

bool grad_enabled();

/// Disables graph recording in its scope (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace w2v
