// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/rng.hpp"

namespace w2v {

struct NamedParameter {
  std::string name;
  Variable var;
};

/// Ordered registry of trainable tensors. Order is registration order and is
/// the canonical order for checkpoints and optimizer state.
class ParameterStore {
 public:
  Variable add(const std::string& name, Tensor init);

  const std::vector<NamedParameter>& all() const { return params_; }
  size_t size() const { return params_.size(); }
  /// Throws std::out_of_range for unknown names.
  const Variable& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  int64_t numel() const;
  void zero_grad();
  /// FNV-1a over names, shapes and raw values.
  uint64_t checksum() const;

 private:
  std::vector<NamedParameter> params_;
};

Tensor normal_tensor(const Shape& shape, double std, Rng& rng);
/// Normal draws redrawn until within two standard deviations.
Tensor truncated_normal_tensor(const Shape& shape, double std, Rng& rng);
Tensor uniform_tensor(const Shape& shape, double lo, double hi, Rng& rng);

}  // namespace w2v
