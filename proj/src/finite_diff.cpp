// SPDX-License-Identifier: Apache-2.0
#include "w2v/finite_diff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace w2v {

namespace {
double checked(double v) {
  if (!std::isfinite(v)) throw std::domain_error("finite_diff_grad: function returned a non-finite value");
  return v;
}
}  // namespace

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: epsilon must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = checked(f(x));
    x[i] = orig - eps;
    const double down = checked(f(x));
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

Tensor finite_diff_grad(const std::function<double()>& f, Tensor& param, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: epsilon must be positive");
  Tensor grad(param.shape());
  for (int64_t i = 0; i < param.size(); ++i) {
    const double orig = param[i];
    param[i] = orig + eps;
    const double up = checked(f());
    param[i] = orig - eps;
    const double down = checked(f());
    param[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  diff = std::sqrt(diff);
  const double denom = std::max(std::sqrt(na), std::sqrt(nb));
  if (denom < floor) return diff;
  return diff / denom;
}

}  // namespace w2v
