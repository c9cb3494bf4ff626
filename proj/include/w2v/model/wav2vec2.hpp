// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "w2v/model/context_network.hpp"
#include "w2v/model/feature_encoder.hpp"
#include "w2v/model/parameters.hpp"
#include "w2v/model/quantizer.hpp"
#include "w2v/model/ssl_objective.hpp"

namespace w2v {

struct ModelConfig {
  EncoderConfig encoder;
  QuantizerConfig quantizer;
  TransformerConfig transformer;
  int64_t sim_dim = 256;  // d_sim

  /// Canonical BASE dimensions.
  static ModelConfig base();
  /// Desk-scale model trained in the experiments.
  static ModelConfig toy();
  /// Two layers of width 8, small enough for exhaustive finite differences.
  static ModelConfig tiny();

  /// Copies the encoder width into the quantizer and transformer inputs.
  void sync_dims();
  void validate() const;
};

/// Encoder, quantizer, context network and the two d_sim projections.
class Wav2Vec2Model {
 public:
  Wav2Vec2Model(const ModelConfig& config, uint64_t init_seed);
  Wav2Vec2Model(const Wav2Vec2Model&) = delete;
  Wav2Vec2Model& operator=(const Wav2Vec2Model&) = delete;

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }

  const FeatureEncoder& encoder() const { return encoder_; }
  const Quantizer& quantizer() const { return quantizer_; }
  const ContextNetwork& context() const { return context_; }
  Variable project_context(const Variable& c) const;
  Variable project_quantized(const Variable& q) const;

 private:
  ModelConfig config_;
  ParameterStore params_;
  FeatureEncoder encoder_;
  Quantizer quantizer_;
  ContextNetwork context_;
  Variable final_proj_w_, final_proj_b_;
  Variable project_q_w_, project_q_b_;
};

enum class LossNormalization {
  /// L_c / masked steps + lambda_d L_d + lambda_p mean_utt(L_p)
  kMaskedSteps,
  /// (L_c + lambda_d L_d + lambda_p L_p) / fixed constant
  kFixed,
};

struct SslOptions {
  double mask_prob = 0.5;
  int64_t mask_span = 10;
  int64_t num_distractors = 100;
  double logit_temperature = 0.1;  // tau_c
  SslWeights weights;
  double gumbel_tau = 2.0;
  /// Gumbel noise and dropout active.
  bool train = true;
  LossNormalization normalization = LossNormalization::kMaskedSteps;
  double fixed_norm = 1.0;
};

/// One utterance of a gpu-batch: waveform samples and a stable identity that
/// seeds its random stream.
struct UtteranceInput {
  std::span<const float> samples;
  uint64_t stream_id = 0;
};

struct SslBatchResult {
  Variable objective;           // the optimized scalar
  double contrastive = 0.0;     // sum over masked steps and utterances
  double diversity = 0.0;       // batch-global
  double penalty = 0.0;         // sum of per-utterance L_p
  double ssl = 0.0;             // combine(contrastive, diversity, penalty)
  int64_t masked_steps = 0;
  int64_t correct = 0;
  int64_t utterances = 0;
  int64_t skipped = 0;          // utterances with too few masked steps to contrast
  std::vector<double> perplexities;
};

/// Forward pass of the SSL objective over a gpu-batch. Each utterance is
/// processed at its true length with randomness from Rng(seed).fork(stream_id).
SslBatchResult ssl_forward(const Wav2Vec2Model& model, std::span<const UtteranceInput> batch,
                           const SslOptions& options, uint64_t seed);

}  // namespace w2v
