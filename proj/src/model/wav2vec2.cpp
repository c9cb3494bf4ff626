// SPDX-License-Identifier: Apache-2.0
#include "w2v/model/wav2vec2.hpp"

#include <stdexcept>

#include "w2v/ops.hpp"

namespace w2v {

ModelConfig ModelConfig::base() {
  ModelConfig c;
  c.sync_dims();
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.encoder.channels = 64;
  c.transformer.layers = 2;
  c.transformer.dim = 64;
  c.transformer.heads = 4;
  c.transformer.ffn_dim = 128;
  c.transformer.pos_kernel = 16;
  c.transformer.pos_groups = 4;
  c.quantizer.codebook_size = 32;
  c.quantizer.codeword_dim = 16;
  c.sim_dim = 32;
  c.sync_dims();
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.encoder.channels = 4;
  c.transformer.layers = 2;
  c.transformer.dim = 8;
  c.transformer.heads = 2;
  c.transformer.ffn_dim = 16;
  c.transformer.pos_kernel = 4;
  c.transformer.pos_groups = 2;
  c.quantizer.codebook_size = 4;
  c.quantizer.codeword_dim = 2;
  c.sim_dim = 4;
  c.sync_dims();
  return c;
}

void ModelConfig::sync_dims() {
  quantizer.input_dim = encoder.channels;
  transformer.input_dim = encoder.channels;
}

void ModelConfig::validate() const {
  encoder.validate();
  quantizer.validate();
  transformer.validate();
  if (sim_dim < 1) throw std::invalid_argument("sim_dim must be positive");
  if (quantizer.input_dim != encoder.channels || transformer.input_dim != encoder.channels) {
    throw std::invalid_argument("quantizer and transformer inputs must match the encoder width");
  }
}

Wav2Vec2Model::Wav2Vec2Model(const ModelConfig& config, uint64_t init_seed) : config_(config) {
  config_.sync_dims();
  config_.validate();
  Rng rng(init_seed);
  Rng enc_rng = rng.fork(1);
  Rng quant_rng = rng.fork(2);
  Rng ctx_rng = rng.fork(3);
  Rng head_rng = rng.fork(4);
  encoder_ = FeatureEncoder(config_.encoder, params_, enc_rng);
  quantizer_ = Quantizer(config_.quantizer, params_, quant_rng);
  context_ = ContextNetwork(config_.transformer, params_, ctx_rng);
  const double s = config_.transformer.init_std;
  final_proj_w_ =
      params_.add("final_proj.weight", truncated_normal_tensor({config_.transformer.dim, config_.sim_dim}, s, head_rng));
  final_proj_b_ = params_.add("final_proj.bias", Tensor({config_.sim_dim}, 0.0));
  const int64_t dq = 2 * config_.quantizer.codeword_dim;
  project_q_w_ = params_.add("project_q.weight", truncated_normal_tensor({dq, config_.sim_dim}, s, head_rng));
  project_q_b_ = params_.add("project_q.bias", Tensor({config_.sim_dim}, 0.0));
}

Variable Wav2Vec2Model::project_context(const Variable& c) const { return ops::linear(c, final_proj_w_, final_proj_b_); }

Variable Wav2Vec2Model::project_quantized(const Variable& q) const {
  return ops::linear(q, project_q_w_, project_q_b_);
}

SslBatchResult ssl_forward(const Wav2Vec2Model& model, std::span<const UtteranceInput> batch,
                           const SslOptions& options, uint64_t seed) {
  if (batch.empty()) throw std::invalid_argument("empty gpu-batch");
  const Rng base(seed);
  SslBatchResult result;
  result.utterances = static_cast<int64_t>(batch.size());
  std::vector<Variable> probs1;
  std::vector<Variable> probs2;
  Variable lc_total;
  Variable lp_total;
  for (const auto& utt : batch) {
    Rng rng = base.fork(utt.stream_id);
    Tensor wave({static_cast<int64_t>(utt.samples.size())});
    for (size_t i = 0; i < utt.samples.size(); ++i) wave[static_cast<int64_t>(i)] = utt.samples[i];
    const Variable z = model.encoder().encode(ops::constant(std::move(wave)));
    const int64_t frames = z.value().rows();

    const Variable lp = l2_penalty(z);
    lp_total = lp_total.defined() ? ops::add(lp_total, lp) : lp;
    result.penalty += lp.value().item();

    const MaskSpec mask = sample_mask(frames, options.mask_prob, options.mask_span, rng);
    const Variable zn = model.context().normalize(z);
    const QuantizedSequence quantized = model.quantizer().quantize(zn, options.gumbel_tau, options.train ? &rng : nullptr);
    probs1.push_back(quantized.probs1);
    probs2.push_back(quantized.probs2);

    const auto masked_count = static_cast<int64_t>(mask.indices.size());
    if (mask.skip || masked_count < 2) {
      ++result.skipped;
      continue;
    }
    const Variable x = model.context().apply_mask(model.context().project_normalized(zn), mask);
    const Variable c = model.context().contextualize(x, frames, options.train ? &rng : nullptr);
    const Variable c_masked = model.project_context(ops::gather_rows(c, mask.indices));
    const Variable q_masked = model.project_quantized(ops::gather_rows(quantized.q, mask.indices));
    const DistractorSample distractors = sample_distractors(masked_count, options.num_distractors, rng);
    const ContrastiveResult lc = contrastive_loss_rows(c_masked, q_masked, distractors, options.logit_temperature);
    lc_total = lc_total.defined() ? ops::add(lc_total, lc.loss) : lc.loss;
    result.contrastive += lc.loss.value().item();
    result.masked_steps += lc.count;
    result.correct += lc.correct;
  }
  const DiversityResult ld = diversity_loss({ops::concat_rows(probs1), ops::concat_rows(probs2)});
  result.diversity = ld.loss.value().item();
  result.perplexities = ld.perplexities;
  result.ssl = combine(result.contrastive, result.diversity, result.penalty, options.weights);

  Variable objective;
  const double n_utt = static_cast<double>(result.utterances);
  if (options.normalization == LossNormalization::kMaskedSteps) {
    objective = ops::add(ops::scale(ld.loss, options.weights.diversity),
                         ops::scale(lp_total, options.weights.penalty / n_utt));
    if (lc_total.defined()) {
      objective = ops::add(objective, ops::scale(lc_total, 1.0 / static_cast<double>(result.masked_steps)));
    }
  } else {
    if (!(options.fixed_norm > 0.0)) throw std::invalid_argument("fixed loss normalization must be positive");
    objective = ops::add(ops::scale(ld.loss, options.weights.diversity), ops::scale(lp_total, options.weights.penalty));
    if (lc_total.defined()) objective = ops::add(objective, lc_total);
    objective = ops::scale(objective, 1.0 / options.fixed_norm);
  }
  result.objective = objective;
  return result;
}

}  // namespace w2v
