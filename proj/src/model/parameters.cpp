// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/parameters.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace w2v {

Variable ParameterStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  Variable var(std::move(init), true);
  params_.push_back({name, var});
  return var;
}

const Variable& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.var;
  }
  throw std::out_of_range("unknown parameter " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

int64_t ParameterStore::numel() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

uint64_t ParameterStore::checksum() const {
  std::string bytes;
  for (const auto& p : params_) {
    bytes += p.name;
    bytes += shape_str(p.var.shape());
    const auto values = p.var.value().values();
    bytes.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
  }
  return fnv1a64(bytes);
}

Tensor normal_tensor(const Shape& shape, double std, Rng& rng) {
  Tensor t(shape);
  for (auto& x : t.values()) x = std * rng.normal();
  return t;
}

Tensor truncated_normal_tensor(const Shape& shape, double std, Rng& rng) {
  Tensor t(shape);
  for (auto& x : t.values()) {
    double z;
    do {
      z = rng.normal();
    } while (std::abs(z) > 2.0);
    x = std * z;
  }
  return t;
}

Tensor uniform_tensor(const Shape& shape, double lo, double hi, Rng& rng) {
  Tensor t(shape);
  for (auto& x : t.values()) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace w2v
