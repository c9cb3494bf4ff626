// SPDX-License-Identifier: Apache-2.0
#include "w2v/finetune/finetune.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "w2v/data/wav.hpp"
#include "w2v/finetune/ctc.hpp"
#include "w2v/ops.hpp"
#include "w2v/train/trainer.hpp"

namespace w2v {

namespace {

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

uint64_t finetune_seed(uint64_t seed) { return splitmix64(seed ^ 0x6374632d6674ULL); }

}  // namespace

bool FreezePlan::trainable(const std::string& name, int64_t step) const {
  if (starts_with(name, "ctc_head.")) return true;
  if (starts_with(name, "context.")) return step >= freeze_context_steps;
  return false;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "id,reference,hypothesis,cer,wer\n";
  char buf[64];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.cer, r.wer);
    out << r.id << "," << r.reference << "," << r.hypothesis << "," << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f", report.cer, report.wer);
  out << "ALL,,," << buf << "\n";
}

CtcFinetuner::CtcFinetuner(const RunConfig& config, data::Manifest train, const Checkpoint* init)
    : config_(config),
      train_(std::move(train)),
      lr_(config.ft_iterations, config.ft_base_lr, config.ft_peak_lr, config.ft_final_lr) {
  config_.validate();
  freeze_.freeze_context_steps = config_.ft_freeze_context_steps;
  ModelConfig mc = config_.model();
  mc.transformer.dropout = config_.ft_dropout;
  model_ = std::make_unique<Wav2Vec2Model>(mc, model_seed(config_.seed));
  const bool has_head = init && init->has_tensor("ctc_head.weight");
  if (init && !has_head) import_parameters(model_->params(), *init);
  Rng head_rng(finetune_seed(config_.seed));
  head_w_ = model_->params().add(
      "ctc_head.weight",
      truncated_normal_tensor({mc.transformer.dim, kNumCtcClasses}, mc.transformer.init_std, head_rng));
  head_b_ = model_->params().add("ctc_head.bias", Tensor({kNumCtcClasses}, 0.0));
  if (has_head) {
    import_parameters(model_->params(), *init);
    if (init->state.contains("step")) step_ = init->state.at("step").get<int64_t>();
  }

  for (const auto& u : train_.entries) {
    if (u.seconds() > config_.ft_batch_seconds) {
      throw std::invalid_argument("utterance " + u.id + " is longer than the fine-tuning batch");
    }
    if (u.transcript.empty()) throw std::invalid_argument("utterance " + u.id + " has no transcript");
    labels_.push_back(encode_transcript(u.transcript));
    const int64_t frames = u.num_samples / mc.encoder.total_stride();
    if (frames < ctc_min_frames(labels_.back())) {
      throw std::invalid_argument("utterance " + u.id + " has " + std::to_string(frames) +
                                  " frames, too few for its transcript");
    }
  }
  features_ = encode_all(train_);
  optimizer_ = std::make_unique<AdamW>(
      model_->params(),
      AdamWConfig{config_.adam_beta1, config_.adam_beta2, config_.adam_eps, config_.weight_decay});
  data::AssemblerConfig ac;
  ac.threshold_seconds = config_.ft_batch_seconds;
  ac.bin_size = config_.bin_size;
  ac.queue_length = config_.queue_length;
  ac.max_spread_seconds = config_.max_spread_seconds;
  ac.max_consecutive_discards = config_.max_consecutive_discards;
  if (!train_.empty()) {
    assembler_ = std::make_unique<data::BatchAssembler>(train_, ac, assembler_seed(finetune_seed(config_.seed)));
  }
}

std::vector<Tensor> CtcFinetuner::encode_all(const data::Manifest& manifest) const {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  out.reserve(manifest.size());
  for (const auto& u : manifest.entries) {
    const auto audio = data::read_wav(u.path);
    Tensor wave({static_cast<int64_t>(audio.size())});
    for (size_t i = 0; i < audio.size(); ++i) wave[static_cast<int64_t>(i)] = audio[i];
    out.push_back(model_->encoder().encode(ops::constant(std::move(wave))).value());
  }
  return out;
}

Variable CtcFinetuner::logits(const Tensor& features, Rng* rng) const {
  const ContextNetwork& ctx = model_->context();
  const int64_t frames = features.rows();
  Variable x = ctx.project_normalized(ctx.normalize(ops::constant(features)));
  if (rng) {
    const MaskSpec mask = sample_mask(frames, config_.ft_mask_prob, config_.ft_mask_span, *rng);
    if (!mask.skip) x = ctx.apply_mask(x, mask);
  }
  return ops::linear(ctx.contextualize(x, frames, rng), head_w_, head_b_);
}

double CtcFinetuner::train_step() {
  if (!assembler_) throw std::logic_error("fine-tuning needs a non-empty training manifest");
  model_->params().zero_grad();
  const data::GpuBatch batch = assembler_->next();
  const Rng base(step_seed(finetune_seed(config_.seed), step_));
  Variable total;
  for (int64_t idx : batch.indices) {
    Rng rng = base.fork(static_cast<uint64_t>(idx));
    const Variable loss = ctc_loss(logits(features_[static_cast<size_t>(idx)], &rng), labels_[static_cast<size_t>(idx)]);
    total = total.defined() ? ops::add(total, loss) : loss;
  }
  const Variable objective = ops::scale(total, 1.0 / static_cast<double>(batch.indices.size()));
  const double value = objective.value().item();
  if (!std::isfinite(value)) throw DivergenceError(step_, "non-finite CTC loss at step " + std::to_string(step_));
  objective.backward();
  const int64_t now = step_;
  optimizer_->step(lr_(step_), [&](const std::string& name) { return freeze_.trainable(name, now); });
  ++step_;
  return value;
}

void CtcFinetuner::train(int64_t steps, std::ostream* log, int64_t log_every) {
  if (steps < 0) steps = config_.ft_iterations;
  double running = 0.0;
  int64_t count = 0;
  while (step_ < steps) {
    running += train_step();
    ++count;
    if (log && step_ % log_every == 0) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "finetune step %lld  ctc %.4f  lr %.3g\n", static_cast<long long>(step_),
                    running / static_cast<double>(count), lr_(step_));
      *log << buf << std::flush;
      running = 0.0;
      count = 0;
    }
  }
}

EvalReport CtcFinetuner::evaluate(const data::Manifest& manifest) const {
  const std::vector<Tensor> features = encode_all(manifest);
  NoGradGuard no_grad;
  EvalReport report;
  int64_t char_edits = 0, chars = 0, word_edits = 0, words = 0;
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto& u = manifest.entries[i];
    EvalRow row;
    row.id = u.id;
    row.reference = u.transcript;
    row.hypothesis = greedy_decode(logits(features[i], nullptr).value());
    row.cer = cer(row.reference, row.hypothesis);
    row.wer = wer(row.reference, row.hypothesis);
    char_edits += edit_distance(row.reference, row.hypothesis);
    chars += static_cast<int64_t>(row.reference.size());
    const auto ref_words = split_words(row.reference);
    word_edits += edit_distance(ref_words, split_words(row.hypothesis));
    words += static_cast<int64_t>(ref_words.size());
    report.rows.push_back(std::move(row));
  }
  if (chars == 0) throw std::invalid_argument("evaluation manifest has no transcripts");
  report.cer = static_cast<double>(char_edits) / static_cast<double>(chars);
  report.wer = static_cast<double>(word_edits) / static_cast<double>(words);
  return report;
}

Checkpoint CtcFinetuner::snapshot() const {
  Checkpoint c;
  c.config = config_.to_json();
  c.state = {{"step", step_}, {"config_hash", config_.hash()}, {"kind", "ctc"}};
  c.tensors = export_parameters(model_->params());
  return c;
}

}  // namespace w2v
