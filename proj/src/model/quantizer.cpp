// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

void QuantizerConfig::validate() const {
  if (codebook_size < 2) throw std::invalid_argument("codebook size must be at least 2");
  if (codeword_dim < 1 || input_dim < 1) throw std::invalid_argument("quantizer dimensions must be positive");
  if (!(tau_start > 0.0 && tau_floor > 0.0 && tau_floor <= tau_start)) {
    throw std::invalid_argument("temperatures must satisfy 0 < tau_floor <= tau_start");
  }
  if (!(tau_floor_fraction > 0.0 && tau_floor_fraction <= 1.0)) {
    throw std::invalid_argument("tau_floor_fraction must lie in (0, 1]");
  }
}

double temperature_at(int64_t step, int64_t total_steps, const QuantizerConfig& config) {
  if (step < 0) throw std::invalid_argument("temperature step must be non-negative");
  if (step == 0) return config.tau_start;
  const double horizon = std::max(1.0, config.tau_floor_fraction * static_cast<double>(total_steps));
  if (static_cast<double>(step) >= horizon) return config.tau_floor;
  const double log_gamma = std::log(config.tau_floor / config.tau_start) / horizon;
  return std::max(config.tau_floor, config.tau_start * std::exp(log_gamma * static_cast<double>(step)));
}

SimilarityStats codebook_similarity_stats(const Tensor& entries) {
  const int64_t v = entries.rows();
  const int64_t d = entries.cols();
  if (v < 2) throw std::invalid_argument("similarity stats need at least 2 codewords");
  std::vector<double> norms(v);
  for (int64_t i = 0; i < v; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += entries.at(i, j) * entries.at(i, j);
    if (s == 0.0) throw std::domain_error("codeword " + std::to_string(i) + " has zero norm");
    norms[i] = std::sqrt(s);
  }
  SimilarityStats stats{0.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  int64_t pairs = 0;
  for (int64_t a = 0; a < v; ++a) {
    for (int64_t b = a + 1; b < v; ++b) {
      double dot = 0.0;
      for (int64_t j = 0; j < d; ++j) dot += entries.at(a, j) * entries.at(b, j);
      const double cos = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      stats.avg += cos;
      stats.min = std::min(stats.min, cos);
      stats.max = std::max(stats.max, cos);
      ++pairs;
    }
  }
  stats.avg /= static_cast<double>(pairs);
  return stats;
}

Quantizer::Quantizer(const QuantizerConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix)
    : config_(config) {
  config_.validate();
  const int64_t v = config_.codebook_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(config_.codeword_dim));
  classifier_w_ = store.add(prefix + "classifier.weight",
                            normal_tensor({config_.input_dim, 2 * v}, config_.classifier_init_std, rng));
  classifier_b_ = store.add(prefix + "classifier.bias", Tensor({2 * v}, 0.0));
  codebook1_ = store.add(prefix + "codebook1", uniform_tensor({v, config_.codeword_dim}, -bound, bound, rng));
  codebook2_ = store.add(prefix + "codebook2", uniform_tensor({v, config_.codeword_dim}, -bound, bound, rng));
}

namespace {

std::vector<int64_t> argmax_rows(const Tensor& one_hot) {
  std::vector<int64_t> index(one_hot.rows());
  for (int64_t r = 0; r < one_hot.rows(); ++r) {
    int64_t best = 0;
    for (int64_t c = 1; c < one_hot.cols(); ++c) {
      if (one_hot.at(r, c) > one_hot.at(r, best)) best = c;
    }
    index[r] = best;
  }
  return index;
}

}  // namespace

QuantizedSequence Quantizer::quantize(const Variable& z, double tau, Rng* rng) const {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel temperature must be positive");
  const int64_t v = config_.codebook_size;
  const Variable logits = ops::linear(z, classifier_w_, classifier_b_);
  QuantizedSequence out;
  Variable selected[2];
  const Variable* books[2] = {&codebook1_, &codebook2_};
  for (int g = 0; g < 2; ++g) {
    const Variable part = ops::slice_cols(logits, g * v, (g + 1) * v);
    Variable one_hot;
    if (rng != nullptr) {
      ops::GumbelSample sample = ops::gumbel_softmax(part, tau, *rng);
      one_hot = ops::straight_through(sample.hard, sample.soft);
    } else {
      one_hot = ops::constant(ops::one_hot_argmax_rows(part.value()));
    }
    (g == 0 ? out.index1 : out.index2) = argmax_rows(one_hot.value());
    (g == 0 ? out.probs1 : out.probs2) = ops::softmax_rows(part);
    selected[g] = ops::matmul(one_hot, *books[g]);
  }
  out.q = ops::concat_cols(selected[0], selected[1]);
  return out;
}

}  // namespace w2v
