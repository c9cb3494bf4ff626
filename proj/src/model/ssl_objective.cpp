// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/ssl_objective.hpp"

#include <numeric>
#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

DistractorSample sample_distractors(int64_t num_masked, int64_t k, Rng& rng) {
  if (num_masked < 2) throw std::invalid_argument("distractor sampling needs at least 2 masked steps");
  if (k < 0) throw std::invalid_argument("distractor count must be non-negative");
  DistractorSample sample;
  sample.per_target.resize(num_masked);
  const int64_t others = num_masked - 1;
  std::vector<int64_t> pool(others);
  for (int64_t t = 0; t < num_masked; ++t) {
    auto& d = sample.per_target[t];
    d.reserve(k);
    if (others >= k) {
      for (int64_t i = 0; i < others; ++i) pool[i] = i < t ? i : i + 1;
      for (int64_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[rng.uniform_int(i, others - 1)]);
        d.push_back(pool[i]);
      }
    } else {
      for (int64_t i = 0; i < k; ++i) {
        const int64_t j = rng.uniform_int(0, others - 1);
        d.push_back(j < t ? j : j + 1);
      }
    }
  }
  return sample;
}

ContrastiveResult contrastive_loss_rows(const Variable& c_masked, const Variable& q_masked,
                                        const DistractorSample& distractors, double temperature) {
  const int64_t n = c_masked.value().rows();
  if (n == 0) throw std::invalid_argument("contrastive loss needs at least one masked step");
  if (q_masked.value().rows() != n || static_cast<int64_t>(distractors.per_target.size()) != n) {
    throw std::invalid_argument("contrastive loss inputs disagree on the number of masked steps");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("contrastive temperature must be positive");
  const int64_t k = n > 0 ? static_cast<int64_t>(distractors.per_target[0].size()) : 0;
  std::vector<int64_t> c_index;
  std::vector<int64_t> q_index;
  c_index.reserve(n * (k + 1));
  q_index.reserve(n * (k + 1));
  for (int64_t t = 0; t < n; ++t) {
    const auto& d = distractors.per_target[t];
    if (static_cast<int64_t>(d.size()) != k) throw std::invalid_argument("ragged distractor sample");
    c_index.push_back(t);
    q_index.push_back(t);
    for (int64_t j : d) {
      if (j < 0 || j >= n || j == t) throw std::invalid_argument("invalid distractor position");
      c_index.push_back(t);
      q_index.push_back(j);
    }
  }
  const Variable cn = ops::l2_normalize_rows(c_masked);
  const Variable qn = ops::l2_normalize_rows(q_masked);
  const Variable sims = ops::rowwise_dot(ops::gather_rows(cn, c_index), ops::gather_rows(qn, q_index));
  const Variable logits = ops::scale(ops::reshape(sims, {n, k + 1}), 1.0 / temperature);
  const std::vector<int64_t> targets(n, 0);

  ContrastiveResult result;
  result.loss = ops::cross_entropy_sum(logits, targets);
  result.count = n;
  const Tensor& s = logits.value();
  for (int64_t t = 0; t < n; ++t) {
    bool best = true;
    for (int64_t j = 1; j <= k; ++j) {
      if (s.at(t, j) >= s.at(t, 0)) {
        best = false;
        break;
      }
    }
    // With no distractors there is nothing to beat.
    if (best && k > 0) ++result.correct;
  }
  return result;
}

ContrastiveResult contrastive_loss(const Variable& cproj, const Variable& qproj, std::span<const int64_t> masked,
                                   const DistractorSample& distractors, double temperature) {
  return contrastive_loss_rows(ops::gather_rows(cproj, masked), ops::gather_rows(qproj, masked), distractors,
                               temperature);
}

DiversityResult diversity_loss(const std::vector<Variable>& probs) {
  if (probs.empty()) throw std::invalid_argument("diversity loss needs at least one codebook");
  DiversityResult result;
  Variable total;
  for (const auto& p : probs) {
    const auto v = static_cast<double>(p.value().cols());
    const Variable ppl = ops::perplexity(ops::mean_rows(p));
    result.perplexities.push_back(ppl.value().item());
    const Variable term = ops::scale(ops::sub(ppl, ops::constant(Tensor::scalar(v))), -1.0);
    total = total.defined() ? ops::add(total, term) : term;
  }
  result.loss = total;
  return result;
}

Variable l2_penalty(const Variable& z) { return ops::mean_square(z); }

Variable combine(const Variable& contrastive, const Variable& diversity, const Variable& penalty,
                 const SslWeights& weights) {
  return ops::add(ops::add(contrastive, ops::scale(diversity, weights.diversity)),
                  ops::scale(penalty, weights.penalty));
}

double combine(double contrastive, double diversity, double penalty, const SslWeights& weights) {
  return contrastive + weights.diversity * diversity + weights.penalty * penalty;
}

}  // namespace w2v
