// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/feature_encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

int64_t EncoderConfig::total_stride() const {
  int64_t s = 1;
  for (int64_t x : strides) s *= x;
  return s;
}

void EncoderConfig::validate() const {
  if (kernels.size() != 7 || strides.size() != 7 || paddings.size() != 7) {
    throw std::invalid_argument("encoder kernels, strides and paddings must each list 7 layers");
  }
  if (channels < 1) throw std::invalid_argument("encoder channels must be positive");
  if (!(grad_scale > 0.0 && grad_scale <= 1.0)) throw std::invalid_argument("encoder grad_scale must lie in (0, 1]");
  for (size_t i = 0; i < 7; ++i) {
    if (kernels[i] < 1 || strides[i] < 1 || paddings[i] < 0) {
      throw std::invalid_argument("encoder layer " + std::to_string(i) + " has an invalid kernel/stride/padding");
    }
  }
}

int64_t encoder_raw_length(const EncoderConfig& config, int64_t samples) {
  int64_t t = samples;
  for (size_t i = 0; i < config.kernels.size(); ++i) {
    t = ops::conv_output_length(t, config.kernels[i], config.strides[i], config.paddings[i]);
  }
  return t;
}

int64_t encoder_frames(const EncoderConfig& config, int64_t samples) { return samples / config.total_stride(); }

FeatureEncoder::FeatureEncoder(const EncoderConfig& config, ParameterStore& store, Rng& rng,
                               const std::string& prefix)
    : config_(config) {
  config_.validate();
  int64_t in = 1;
  for (size_t i = 0; i < config_.kernels.size(); ++i) {
    const int64_t k = config_.kernels[i];
    const double std = std::sqrt(2.0 / static_cast<double>(k * in));
    const std::string name = prefix + "conv" + std::to_string(i);
    weights_.push_back(store.add(name + ".weight", normal_tensor({k, in, config_.channels}, std, rng)));
    biases_.push_back(store.add(name + ".bias", Tensor({config_.channels}, 0.0)));
    in = config_.channels;
  }
  norm_gain_ = store.add(prefix + "norm0.gain", Tensor({config_.channels}, 1.0));
  norm_bias_ = store.add(prefix + "norm0.bias", Tensor({config_.channels}, 0.0));
}

Variable FeatureEncoder::encode_unscaled(const Variable& waveform) const {
  const int64_t r = waveform.value().size();
  const int64_t stride = config_.total_stride();
  if (r < stride) {
    throw std::invalid_argument("waveform has " + std::to_string(r) + " samples; the encoder needs at least " +
                                std::to_string(stride));
  }
  Variable x = ops::reshape(waveform, {r, 1});
  for (size_t i = 0; i < weights_.size(); ++i) {
    x = ops::conv1d(x, weights_[i], biases_[i], config_.strides[i], config_.paddings[i]);
    if (i == 0) x = ops::group_norm(x, config_.channels, norm_gain_, norm_bias_);
    x = ops::gelu_tanh(x);
  }
  const int64_t frames = r / stride;
  if (x.value().dim(0) < frames) throw std::logic_error("encoder produced fewer frames than floor(r / stride)");
  if (x.value().dim(0) > frames) x = ops::slice_rows(x, 0, frames);
  return x;
}

Variable FeatureEncoder::encode(const Variable& waveform) const {
  return ops::grad_scale(encode_unscaled(waveform), config_.grad_scale);
}

}  // namespace w2v
