// SPDX-License-Identifier: Apache-2.0
#include "w2v/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

namespace w2v {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Variable::Variable(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Variable Variable::make(Tensor value, const std::vector<Variable>& inputs, std::function<void(Node&)> backward) {
  Variable out(std::move(value), false);
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->inputs.reserve(inputs.size());
  for (const auto& in : inputs) out.node_->inputs.push_back(in.node_);
  out.node_->backward = std::move(backward);
  return out;
}

void Variable::zero_grad() {
  if (node_) node_->grad = Tensor();
}

void Variable::backward() const {
  if (value().size() != 1) throw std::logic_error("backward() without seed requires a scalar output");
  backward(Tensor(value().shape(), 1.0));
}

void Variable::backward(const Tensor& seed) const {
  if (!requires_grad()) return;
  if (!seed.same_shape(value())) throw std::invalid_argument("backward seed shape mismatch");

  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer() += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) {
      n->backward(*n);
      // Interior gradients are not needed once propagated.
      n->grad = Tensor();
    }
  }
}

}  // namespace w2v
