// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "w2v/model/parameters.hpp"

namespace w2v {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.01;
};

/// Adam moments with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Bias correction uses a per-parameter step count, so a parameter that was
/// frozen starts its correction when it is first updated.
class AdamW {
 public:
  AdamW(const ParameterStore& store, const AdamWConfig& config = {});

  /// Updates every parameter for which `trainable(name)` holds (all when
  /// empty) from its accumulated gradient. Parameters without a gradient
  /// are treated as having a zero gradient.
  void step(double lr, const std::function<bool(const std::string&)>& trainable = {});

  const AdamWConfig& config() const { return config_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  const std::vector<int64_t>& step_counts() const { return t_; }
  void set_state(std::vector<Tensor> m, std::vector<Tensor> v, std::vector<int64_t> t);

 private:
  const ParameterStore* store_;
  AdamWConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::vector<int64_t> t_;
};

}  // namespace w2v
