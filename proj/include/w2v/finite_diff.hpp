// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "w2v/autograd.hpp"

namespace w2v {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every
/// coordinate. Throws if f returns a non-finite value.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> params, double eps);

/// Same oracle applied in place to a tensor that `f` reads through captured
/// state (e.g. a parameter Variable). The tensor is restored afterwards.
Tensor finite_diff_grad(const std::function<double()>& f, Tensor& param, double eps);

/// ||a - b|| / max(||a||, ||b||), or the absolute error when both are below `floor`.
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace w2v
