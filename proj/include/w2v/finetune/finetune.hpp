// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "w2v/data/batching.hpp"
#include "w2v/data/manifest.hpp"
#include "w2v/model/wav2vec2.hpp"
#include "w2v/train/checkpoint.hpp"
#include "w2v/train/config.hpp"
#include "w2v/train/optimizer.hpp"
#include "w2v/train/schedule.hpp"

namespace w2v {

/// The feature encoder never trains; the context network (including its
/// input normalization and mask vector) joins after freeze_context_steps.
/// The quantizer and the contrastive projections are unused and frozen.
struct FreezePlan {
  int64_t freeze_context_steps = 5000;

  bool trainable(const std::string& name, int64_t step) const;
};

struct EvalRow {
  std::string id;
  std::string reference;
  std::string hypothesis;
  double cer = 0.0;
  double wer = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  /// Corpus-level rates: total edits over total reference characters / words.
  double cer = 0.0;
  double wer = 0.0;
};

void write_eval_csv(std::ostream& out, const EvalReport& report);

/// CTC fine-tuning of a pre-trained (or randomly initialized) model with a
/// linear character head on the context network output.
class CtcFinetuner {
 public:
  /// `init` null means scratch: a random model from the config seed. `init`
  /// may be a pre-trained checkpoint or a fine-tuned one (with a CTC head,
  /// resuming its step count). The model dims come from `config`; a
  /// checkpoint with different tensors is rejected with every mismatched
  /// name. An empty `train` manifest allows evaluation only.
  CtcFinetuner(const RunConfig& config, data::Manifest train, const Checkpoint* init);
  CtcFinetuner(const CtcFinetuner&) = delete;
  CtcFinetuner& operator=(const CtcFinetuner&) = delete;

  /// One update on a single gpu-batch of up to ft_batch_seconds. Returns the
  /// mean CTC loss per utterance.
  double train_step();
  /// Runs to `steps` (ft_iterations when negative), logging every `log_every`.
  void train(int64_t steps = -1, std::ostream* log = nullptr, int64_t log_every = 100);

  /// Greedy decoding without masking or dropout.
  EvalReport evaluate(const data::Manifest& manifest) const;

  int64_t step() const { return step_; }
  double lr_at(int64_t step) const { return lr_(step); }
  const FreezePlan& freeze_plan() const { return freeze_; }
  Wav2Vec2Model& model() { return *model_; }
  const Wav2Vec2Model& model() const { return *model_; }
  Checkpoint snapshot() const;

 private:
  Variable logits(const Tensor& features, Rng* rng) const;
  std::vector<Tensor> encode_all(const data::Manifest& manifest) const;

  RunConfig config_;
  data::Manifest train_;
  std::unique_ptr<Wav2Vec2Model> model_;
  Variable head_w_, head_b_;
  std::vector<Tensor> features_;  // frozen encoder output per training utterance
  std::vector<std::vector<int64_t>> labels_;
  std::unique_ptr<AdamW> optimizer_;
  std::unique_ptr<data::BatchAssembler> assembler_;
  TriStageLr lr_;
  FreezePlan freeze_;
  int64_t step_ = 0;
};

}  // namespace w2v
