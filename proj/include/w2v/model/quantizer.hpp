// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/model/parameters.hpp"

namespace w2v {

struct QuantizerConfig {
  int64_t input_dim = 512;
  int64_t codebook_size = 320;  // V
  int64_t codeword_dim = 128;   // d_G
  double tau_start = 2.0;
  double tau_floor = 0.5;
  /// Fraction of total steps at which tau reaches its floor.
  double tau_floor_fraction = 0.75;
  /// Standard deviation of the classifier weight init.
  double classifier_init_std = 1.0;

  void validate() const;
};

struct QuantizedSequence {
  Variable q;                      // [T, 2 d_G]
  Variable probs1;                 // [T, V], plain softmax of the logits
  Variable probs2;
  std::vector<int64_t> index1;     // selected entry per step
  std::vector<int64_t> index2;
};

/// tau(step) = max(floor, start * gamma^step), gamma chosen so the floor is hit
/// at tau_floor_fraction * total_steps.
double temperature_at(int64_t step, int64_t total_steps, const QuantizerConfig& config = {});

struct SimilarityStats {
  double avg = 0.0;
  double min = 0.0;
  double max = 0.0;
};
/// Cosine similarity over all unordered pairs of distinct rows of entries[V, d].
SimilarityStats codebook_similarity_stats(const Tensor& entries);

/// Two-codebook product quantizer with gumbel-softmax selection.
class Quantizer {
 public:
  Quantizer() = default;
  Quantizer(const QuantizerConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix = "quantizer.");

  /// With an rng, selection is a straight-through gumbel-softmax draw at
  /// temperature tau. Without one, the argmax of the logits is selected.
  QuantizedSequence quantize(const Variable& z, double tau, Rng* rng) const;

  const Variable& codebook(int which) const { return which == 0 ? codebook1_ : codebook2_; }
  const QuantizerConfig& config() const { return config_; }

 private:
  QuantizerConfig config_;
  Variable classifier_w_;  // [d_z, 2V]
  Variable classifier_b_;  // [2V]
  Variable codebook1_;     // [V, d_G]
  Variable codebook2_;
};

}  // namespace w2v
