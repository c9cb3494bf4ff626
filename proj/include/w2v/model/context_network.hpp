// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/model/parameters.hpp"

namespace w2v {

struct TransformerConfig {
  int64_t input_dim = 512;  // d_z
  int64_t layers = 12;
  int64_t dim = 768;
  int64_t heads = 12;
  int64_t ffn_dim = 2048;
  double dropout = 0.1;
  int64_t pos_kernel = 128;
  int64_t pos_groups = 16;
  double init_std = 0.02;

  void validate() const;
};

struct MaskSpec {
  std::vector<int64_t> starts;   // distinct span starts, sorted
  std::vector<int64_t> indices;  // union of the spans, sorted and unique
  int64_t num_spans = 0;
  /// No span could be placed (n_r = 0); the utterance has nothing to contrast.
  bool skip = false;
};

/// n_r = floor(T p_m / L_m) distinct starts drawn uniformly from [0, T); each
/// covers start..start+L_m-1 clipped to T.
MaskSpec sample_mask(int64_t valid_len, double mask_prob, int64_t span, Rng& rng);
int64_t mask_span_count(int64_t valid_len, double mask_prob, int64_t span);

struct TransformerLayer {
  Variable wq, bq, wk, bk, wv, bv, wo, bo;
  Variable ln1_gain, ln1_bias;
  Variable w1, b1, w2, b2;
  Variable ln2_gain, ln2_bias;
};

/// LayerNorm + projection of Z, masking, convolutional relative positional
/// embedding and a post-LN transformer.
class ContextNetwork {
 public:
  ContextNetwork() = default;
  ContextNetwork(const TransformerConfig& config, ParameterStore& store, Rng& rng,
                 const std::string& prefix = "context.");

  /// LayerNorm over the latent dimension followed by the d_z -> d_c projection.
  Variable project(const Variable& z) const;
  Variable normalize(const Variable& z) const;
  Variable project_normalized(const Variable& normalized) const;
  /// Rows listed in the mask are replaced by the learned mask vector.
  Variable apply_mask(const Variable& projected, const MaskSpec& mask) const;
  /// Grouped weight-normalized convolution plus GELU, trimmed to the input length.
  Variable relative_pos_embedding(const Variable& x) const;
  /// Rows at index >= valid_len are padding: they are zeroed before the
  /// positional convolution and never attended to. With a dropout rng the
  /// three dropout sites of every layer are active.
  Variable contextualize(const Variable& x, int64_t valid_len, Rng* dropout_rng = nullptr) const;

  const Variable& mask_vector() const { return mask_vector_; }
  const TransformerConfig& config() const { return config_; }

 private:
  TransformerConfig config_;
  Variable feature_norm_gain_, feature_norm_bias_;
  Variable proj_w_, proj_b_;
  Variable mask_vector_;
  Variable pos_direction_, pos_magnitude_, pos_bias_;
  Variable input_norm_gain_, input_norm_bias_;
  std::vector<TransformerLayer> layers_;
};

}  // namespace w2v
