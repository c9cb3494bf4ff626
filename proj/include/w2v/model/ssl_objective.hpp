// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "w2v/autograd.hpp"
#include "w2v/rng.hpp"

namespace w2v {

struct SslWeights {
  double diversity = 0.1;  // lambda_d
  double penalty = 10.0;   // lambda_p
};

/// For every masked position i (an index into M), k candidate positions drawn
/// from M without i.
struct DistractorSample {
  std::vector<std::vector<int64_t>> per_target;
};

/// Positions refer to the order of M (0..|M|-1). Without replacement when
/// |M| - 1 >= k, otherwise with replacement.
DistractorSample sample_distractors(int64_t num_masked, int64_t k, Rng& rng);

struct ContrastiveResult {
  Variable loss;         // summed over masked steps
  int64_t correct = 0;   // target strictly above every distractor
  int64_t count = 0;     // masked steps
  double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count); }
};

/// c_masked[n, d] and q_masked[n, d] hold the projected context and quantized
/// vectors at the n masked steps, in the same order.
ContrastiveResult contrastive_loss_rows(const Variable& c_masked, const Variable& q_masked,
                                        const DistractorSample& distractors, double temperature = 0.1);
/// Full sequences cproj[T, d], qproj[T, d]; `masked` lists the time indices of
/// M and distractor positions index into it.
ContrastiveResult contrastive_loss(const Variable& cproj, const Variable& qproj, std::span<const int64_t> masked,
                                   const DistractorSample& distractors, double temperature = 0.1);

struct DiversityResult {
  Variable loss;
  std::vector<double> perplexities;
};

/// probs[g] holds the softmax rows of codebook g for every prediction in the
/// batch. L_d = sum_g (V - exp(H(mean row))).
DiversityResult diversity_loss(const std::vector<Variable>& probs);

/// Mean of squared components of the valid latent frames.
Variable l2_penalty(const Variable& z);

Variable combine(const Variable& contrastive, const Variable& diversity, const Variable& penalty,
                 const SslWeights& weights = {});
double combine(double contrastive, double diversity, double penalty, const SslWeights& weights = {});

}  // namespace w2v
