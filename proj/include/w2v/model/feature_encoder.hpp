// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/model/parameters.hpp"

namespace w2v {

struct EncoderConfig {
  int64_t channels = 512;
  std::vector<int64_t> kernels = {10, 3, 3, 3, 3, 2, 2};
  std::vector<int64_t> strides = {5, 2, 2, 2, 2, 2, 2};
  std::vector<int64_t> paddings = {3, 1, 1, 1, 1, 0, 0};
  double grad_scale = 0.1;

  /// Product of strides (320 for the canonical layout).
  int64_t total_stride() const;
  void validate() const;
};

/// Frame count after the per-layer convolution arithmetic, before trimming.
int64_t encoder_raw_length(const EncoderConfig& config, int64_t samples);
/// floor(samples / total_stride): the number of latent frames.
int64_t encoder_frames(const EncoderConfig& config, int64_t samples);

/// Convolutional waveform encoder: conv -> (GroupNorm on layer 1) -> GELU,
/// seven times, then the gradient-scaling layer.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const EncoderConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix = "encoder.");

  /// waveform[r] or [r, 1] -> Z[floor(r / 320), channels]
  Variable encode(const Variable& waveform) const;
  /// Same network without the gradient-scaling layer.
  Variable encode_unscaled(const Variable& waveform) const;

  const EncoderConfig& config() const { return config_; }

 private:
  EncoderConfig config_;
  std::vector<Variable> weights_;
  std::vector<Variable> biases_;
  Variable norm_gain_;
  Variable norm_bias_;
};

}  // namespace w2v
