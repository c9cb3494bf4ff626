// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "w2v/model/parameters.hpp"
#include "w2v/train/trainer.hpp"

namespace w2v {

struct ParameterVariance {
  std::string name;
  double mean_variance = 0.0;
  double mean_std = 0.0;
};

struct GradVarianceReport {
  int64_t step = 0;
  double batch_seconds = 0.0;   // configured size, or the mean of utterance-count batches
  int64_t batch_utterances = 0; // fixed count, or 0 when batches are built by seconds
  int64_t n_batches = 0;
  /// Mean over every scalar parameter of its gradient standard deviation.
  double avg_std = 0.0;
  std::vector<ParameterVariance> per_parameter;
};

/// Unbiased (n - 1) variance of every scalar parameter gradient over n calls
/// of `compute_gradient(i)`, which must leave fresh gradients in `store`.
/// Gradients are zeroed before each call and the parameter values are never
/// modified. Throws std::invalid_argument when n < 2.
GradVarianceReport gradient_variance(ParameterStore& store, int64_t n,
                                     const std::function<void(int64_t)>& compute_gradient);

struct ProbeOptions {
  int64_t n_batches = 10;
  uint64_t seed = 0;
  /// Batch size in speech seconds; the run's batch_seconds when <= 0.
  double batch_seconds = 0.0;
  /// When > 0, each batch is this many utterances drawn without replacement
  /// instead of an assembled batch.
  int64_t batch_utterances = 0;
  /// Gumbel noise and dropout active, as in training.
  bool stochastic = true;
};

/// Raw SSL gradients of the trainer's current model on independently drawn
/// batches. No optimizer state is read and no update is applied.
GradVarianceReport probe_gradient_variance(Trainer& trainer, const ProbeOptions& options);

std::string probe_csv_header();
std::string probe_csv_row(const GradVarianceReport& r);

}  // namespace w2v
