// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/rng.hpp"

/// Differentiable operations on row-major [rows, cols] tensors. Sequences are
/// time-major: row t holds the feature vector of frame t.
namespace w2v::ops {

inline constexpr double kNormEps = 1e-5;

Variable constant(Tensor t);

Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable scale(const Variable& a, double s);
/// x[n, d] + row[d] broadcast over rows.
Variable add_row(const Variable& x, const Variable& row);
Variable matmul(const Variable& a, const Variable& b);
/// x[n, in] * w[in, out] + b[out]
Variable linear(const Variable& x, const Variable& w, const Variable& b);
Variable reshape(const Variable& x, Shape shape);

/// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Variable gelu_tanh(const Variable& x);
double gelu_tanh(double x);

/// Normalizes each row of x[n, d] and applies per-column gain and bias.
Variable layer_norm(const Variable& x, const Variable& gain, const Variable& bias, double eps = kNormEps);
/// x[time, channels]; each group of channels is normalized over time and the
/// channels of the group, then the per-channel affine transform is applied.
Variable group_norm(const Variable& x, int64_t groups, const Variable& gain, const Variable& bias,
                    double eps = kNormEps);

/// 1-d convolution with zero padding on both sides.
/// x[time, c_in], w[kernel, c_in / groups, c_out], b[c_out] -> [time_out, c_out]
Variable conv1d(const Variable& x, const Variable& w, const Variable& b, int64_t stride, int64_t padding,
                int64_t groups = 1);
int64_t conv_output_length(int64_t length, int64_t kernel, int64_t stride, int64_t padding);

/// Effective kernel g_o * v / ||v_o|| with the norm taken per output channel
/// (the last dimension of v).
Variable weight_norm(const Variable& direction, const Variable& magnitude);

/// Identity forward; incoming gradient is multiplied by `factor`.
Variable grad_scale(const Variable& x, double factor);

Variable softmax_rows(const Variable& x);
Variable log_softmax_rows(const Variable& x);
Tensor softmax_rows(const Tensor& x);

/// Inverted dropout; identity when p == 0.
Variable dropout(const Variable& x, double p, Rng& rng);

struct GumbelSample {
  Tensor hard;   // one-hot rows
  Variable soft; // softmax((logits + g) / tau)
};
/// Per-row gumbel-softmax draw with noise -log(-log(u)), u clamped to
/// [1e-12, 1 - 1e-12].
GumbelSample gumbel_softmax(const Variable& logits, double tau, Rng& rng);
/// Forward value is `hard`; the gradient passes to `soft` unchanged.
Variable straight_through(const Tensor& hard, const Variable& soft);
Tensor one_hot_argmax_rows(const Tensor& x);

Variable concat_cols(const Variable& a, const Variable& b);
Variable concat_rows(const std::vector<Variable>& parts);
Variable slice_rows(const Variable& x, int64_t begin, int64_t end);
Variable slice_cols(const Variable& x, int64_t begin, int64_t end);
Variable gather_rows(const Variable& x, std::span<const int64_t> index);
/// Rows listed in `rows` are replaced by `row`; others pass through.
Variable replace_rows(const Variable& x, const Variable& row, std::span<const int64_t> rows);
/// Rows at index >= begin are set to zero.
Variable zero_rows_from(const Variable& x, int64_t begin);

/// Multi-head scaled dot-product attention on already projected q, k, v
/// [time, dim]. Keys at index >= valid_keys get a score of -inf. Dropout is
/// applied to the attention weights when p > 0 and rng is given.
Variable attention(const Variable& q, const Variable& k, const Variable& v, int64_t heads, int64_t valid_keys,
                   double dropout_p = 0.0, Rng* rng = nullptr, Tensor* weights_out = nullptr);

/// Each row divided by its euclidean norm. Zero rows are an error.
Variable l2_normalize_rows(const Variable& x);
/// out[i] = <a_i, b_i>
Variable rowwise_dot(const Variable& a, const Variable& b);
/// sum_i -log softmax(logits_i)[target_i]
Variable cross_entropy_sum(const Variable& logits, std::span<const int64_t> targets);

Variable sum(const Variable& x);
Variable mean(const Variable& x);
Variable mean_rows(const Variable& x);
Variable mean_square(const Variable& x);
/// exp(-sum_j p_j log p_j) with 0 log 0 = 0.
Variable perplexity(const Variable& p);

}  // namespace w2v::ops
