// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace w2v {

AdamW::AdamW(const ParameterStore& store, const AdamWConfig& config) : store_(&store), config_(config) {
  for (const auto& p : store.all()) {
    m_.emplace_back(p.var.shape(), 0.0);
    v_.emplace_back(p.var.shape(), 0.0);
  }
  t_.assign(store.size(), 0);
}

void AdamW::step(double lr, const std::function<bool(const std::string&)>& trainable) {
  const auto& params = store_->all();
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for (size_t i = 0; i < params.size(); ++i) {
    if (trainable && !trainable(params[i].name)) continue;
    Variable var = params[i].var;
    const bool has_grad = var.has_grad();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(++t_[i]));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_[i]));
    auto p = var.value().values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (size_t j = 0; j < p.size(); ++j) {
      const double g = has_grad ? var.grad()[static_cast<int64_t>(j)] : 0.0;
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double update = (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
      p[j] -= lr * (update + config_.weight_decay * p[j]);
    }
  }
}

void AdamW::set_state(std::vector<Tensor> m, std::vector<Tensor> v, std::vector<int64_t> t) {
  const auto& params = store_->all();
  if (m.size() != params.size() || v.size() != params.size() || t.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match the parameter count");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (m[i].shape() != params[i].var.shape() || v[i].shape() != params[i].var.shape()) {
      throw std::invalid_argument("optimizer state shape mismatch for " + params[i].name);
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = std::move(t);
}

}  // namespace w2v
