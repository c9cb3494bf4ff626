// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/context_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

void TransformerConfig::validate() const {
  if (layers < 1 || dim < 1 || heads < 1 || ffn_dim < 1 || input_dim < 1) {
    throw std::invalid_argument("transformer dimensions must be positive");
  }
  if (dim % heads != 0) throw std::invalid_argument("model dim must be divisible by the number of heads");
  if (pos_kernel < 1 || pos_groups < 1 || dim % pos_groups != 0) {
    throw std::invalid_argument("positional convolution groups must divide the model dim");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

int64_t mask_span_count(int64_t valid_len, double mask_prob, int64_t span) {
  if (valid_len < 1) throw std::invalid_argument("mask needs at least one frame");
  if (span < 1) throw std::invalid_argument("mask span must be positive");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw std::invalid_argument("mask probability must lie in [0, 1]");
  // The small offset keeps exact products such as 100 * 0.5 / 10 from flooring down.
  return static_cast<int64_t>(std::floor(static_cast<double>(valid_len) * mask_prob / static_cast<double>(span) + 1e-9));
}

MaskSpec sample_mask(int64_t valid_len, double mask_prob, int64_t span, Rng& rng) {
  MaskSpec mask;
  mask.num_spans = mask_span_count(valid_len, mask_prob, span);
  if (mask.num_spans == 0) {
    mask.skip = true;
    return mask;
  }
  std::vector<int64_t> pool(valid_len);
  std::iota(pool.begin(), pool.end(), 0);
  for (int64_t i = 0; i < mask.num_spans; ++i) {
    std::swap(pool[i], pool[rng.uniform_int(i, valid_len - 1)]);
  }
  mask.starts.assign(pool.begin(), pool.begin() + mask.num_spans);
  std::sort(mask.starts.begin(), mask.starts.end());
  std::vector<char> covered(valid_len, 0);
  for (int64_t s : mask.starts) {
    for (int64_t t = s; t < std::min(valid_len, s + span); ++t) covered[t] = 1;
  }
  for (int64_t t = 0; t < valid_len; ++t) {
    if (covered[t]) mask.indices.push_back(t);
  }
  return mask;
}

ContextNetwork::ContextNetwork(const TransformerConfig& config, ParameterStore& store, Rng& rng,
                               const std::string& prefix)
    : config_(config) {
  config_.validate();
  const int64_t d = config_.dim;
  const double s = config_.init_std;
  feature_norm_gain_ = store.add(prefix + "feature_norm.gain", Tensor({config_.input_dim}, 1.0));
  feature_norm_bias_ = store.add(prefix + "feature_norm.bias", Tensor({config_.input_dim}, 0.0));
  proj_w_ = store.add(prefix + "proj.weight", truncated_normal_tensor({config_.input_dim, d}, s, rng));
  proj_b_ = store.add(prefix + "proj.bias", Tensor({d}, 0.0));
  mask_vector_ = store.add(prefix + "mask_vector", uniform_tensor({d}, 0.0, 1.0, rng));

  const int64_t k = config_.pos_kernel;
  const int64_t per_group = d / config_.pos_groups;
  Tensor direction = normal_tensor({k, per_group, d}, std::sqrt(4.0 / static_cast<double>(k * d)), rng);
  Tensor magnitude({d}, 0.0);
  for (int64_t o = 0; o < d; ++o) {
    double n2 = 0.0;
    for (int64_t i = 0; i < k * per_group; ++i) n2 += direction.at(i, o) * direction.at(i, o);
    magnitude[o] = std::sqrt(n2);
  }
  pos_direction_ = store.add(prefix + "pos_conv.direction", std::move(direction));
  pos_magnitude_ = store.add(prefix + "pos_conv.magnitude", std::move(magnitude));
  pos_bias_ = store.add(prefix + "pos_conv.bias", Tensor({d}, 0.0));
  input_norm_gain_ = store.add(prefix + "input_norm.gain", Tensor({d}, 1.0));
  input_norm_bias_ = store.add(prefix + "input_norm.bias", Tensor({d}, 0.0));

  for (int64_t l = 0; l < config_.layers; ++l) {
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
    TransformerLayer layer;
    layer.wq = store.add(p + "attn.q.weight", truncated_normal_tensor({d, d}, s, rng));
    layer.bq = store.add(p + "attn.q.bias", Tensor({d}, 0.0));
    layer.wk = store.add(p + "attn.k.weight", truncated_normal_tensor({d, d}, s, rng));
    layer.bk = store.add(p + "attn.k.bias", Tensor({d}, 0.0));
    layer.wv = store.add(p + "attn.v.weight", truncated_normal_tensor({d, d}, s, rng));
    layer.bv = store.add(p + "attn.v.bias", Tensor({d}, 0.0));
    layer.wo = store.add(p + "attn.out.weight", truncated_normal_tensor({d, d}, s, rng));
    layer.bo = store.add(p + "attn.out.bias", Tensor({d}, 0.0));
    layer.ln1_gain = store.add(p + "ln1.gain", Tensor({d}, 1.0));
    layer.ln1_bias = store.add(p + "ln1.bias", Tensor({d}, 0.0));
    layer.w1 = store.add(p + "ffn1.weight", truncated_normal_tensor({d, config_.ffn_dim}, s, rng));
    layer.b1 = store.add(p + "ffn1.bias", Tensor({config_.ffn_dim}, 0.0));
    layer.w2 = store.add(p + "ffn2.weight", truncated_normal_tensor({config_.ffn_dim, d}, s, rng));
    layer.b2 = store.add(p + "ffn2.bias", Tensor({d}, 0.0));
    layer.ln2_gain = store.add(p + "ln2.gain", Tensor({d}, 1.0));
    layer.ln2_bias = store.add(p + "ln2.bias", Tensor({d}, 0.0));
    layers_.push_back(std::move(layer));
  }
}

Variable ContextNetwork::normalize(const Variable& z) const {
  return ops::layer_norm(z, feature_norm_gain_, feature_norm_bias_);
}

Variable ContextNetwork::project_normalized(const Variable& normalized) const {
  return ops::linear(normalized, proj_w_, proj_b_);
}

Variable ContextNetwork::project(const Variable& z) const { return project_normalized(normalize(z)); }

Variable ContextNetwork::apply_mask(const Variable& projected, const MaskSpec& mask) const {
  if (mask.indices.empty()) return projected;
  const int64_t t = projected.value().rows();
  for (int64_t i : mask.indices) {
    if (i < 0 || i >= t) throw std::out_of_range("mask index outside the sequence");
  }
  return ops::replace_rows(projected, mask_vector_, mask.indices);
}

Variable ContextNetwork::relative_pos_embedding(const Variable& x) const {
  const int64_t t = x.value().rows();
  if (t < 1) throw std::invalid_argument("positional embedding needs at least one frame");
  const Variable kernel = ops::weight_norm(pos_direction_, pos_magnitude_);
  Variable y = ops::conv1d(x, kernel, pos_bias_, 1, config_.pos_kernel / 2, config_.pos_groups);
  if (y.value().rows() > t) y = ops::slice_rows(y, 0, t);
  return ops::gelu_tanh(y);
}

Variable ContextNetwork::contextualize(const Variable& input, int64_t valid_len, Rng* dropout_rng) const {
  const int64_t t = input.value().rows();
  if (valid_len <= 0) throw std::invalid_argument("all frames are padding; nothing to contextualize");
  if (valid_len > t) throw std::invalid_argument("valid length exceeds the sequence length");
  Variable x = valid_len < t ? ops::zero_rows_from(input, valid_len) : input;
  x = ops::add(x, relative_pos_embedding(x));
  x = ops::layer_norm(x, input_norm_gain_, input_norm_bias_);
  const double p = dropout_rng != nullptr ? config_.dropout : 0.0;
  for (const auto& layer : layers_) {
    const Variable q = ops::linear(x, layer.wq, layer.bq);
    const Variable k = ops::linear(x, layer.wk, layer.bk);
    const Variable v = ops::linear(x, layer.wv, layer.bv);
    Variable a = ops::attention(q, k, v, config_.heads, valid_len, p, dropout_rng);
    a = ops::linear(a, layer.wo, layer.bo);
    if (p > 0.0) a = ops::dropout(a, p, *dropout_rng);
    x = ops::layer_norm(ops::add(x, a), layer.ln1_gain, layer.ln1_bias);
    Variable h = ops::gelu_tanh(ops::linear(x, layer.w1, layer.b1));
    h = ops::linear(h, layer.w2, layer.b2);
    if (p > 0.0) h = ops::dropout(h, p, *dropout_rng);
    x = ops::layer_norm(ops::add(x, h), layer.ln2_gain, layer.ln2_bias);
  }
  return x;
}

}  // namespace w2v
