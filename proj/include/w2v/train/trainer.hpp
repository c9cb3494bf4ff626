// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "w2v/data/batching.hpp"
#include "w2v/data/manifest.hpp"
#include "w2v/data/waveforms.hpp"
#include "w2v/model/wav2vec2.hpp"
#include "w2v/train/checkpoint.hpp"
#include "w2v/train/config.hpp"
#include "w2v/train/optimizer.hpp"
#include "w2v/train/schedule.hpp"

namespace w2v {

/// One row of the validation metrics CSV.
struct MetricRecord {
  int64_t step = 0;
  double lc = 0.0;           // contrastive loss per utterance
  double ld = 0.0;           // diversity loss of the pooled distribution
  double lp = 0.0;           // feature penalty per utterance
  double lssl = 0.0;         // lc + lambda_d ld + lambda_p lp
  double lc_per_step = 0.0;  // contrastive loss per masked step
  double accuracy = 0.0;
  double perplexity1 = 0.0;
  double perplexity2 = 0.0;
  SimilarityStats similarity1;
  SimilarityStats similarity2;
  double lr = 0.0;
  double hours_upper = 0.0;
  double hours_measured = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricRecord& r);
std::vector<MetricRecord> read_metrics_csv(const std::filesystem::path& path);

enum class SelectOn { kSsl, kContrastive };
SelectOn parse_select_on(const std::string& name);
/// Index of the record with the lowest validation loss; ties go to the
/// earliest step. Throws std::invalid_argument on an empty series.
size_t select_best(std::span<const MetricRecord> records, SelectOn on = SelectOn::kSsl);

/// Validation pass in eval mode (no gumbel noise, no dropout) over every
/// utterance, with masks and distractors drawn from `seed`.
MetricRecord evaluate_ssl(const Wav2Vec2Model& model, const data::WaveformStore& audio, const SslOptions& options,
                          uint64_t seed);

/// Inputs for ssl_forward; stream ids are manifest positions.
std::vector<UtteranceInput> gather_inputs(const data::WaveformStore& audio, std::span<const int64_t> indices);

/// Parameters under their own names.
std::vector<NamedTensor> export_parameters(const ParameterStore& store);
/// Copies every parameter of `store` from the checkpoint. Missing tensors and
/// shape mismatches are collected and reported together.
void import_parameters(ParameterStore& store, const Checkpoint& ckpt);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int64_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  int64_t step() const { return step_; }

 private:
  int64_t step_;
};

struct StepStats {
  int64_t step = 0;  // completed steps after this update
  double objective = 0.0;
  double ssl = 0.0;
  double lr = 0.0;
  double tau = 0.0;
  int64_t utterances = 0;
  int64_t masked_steps = 0;
  int64_t correct = 0;
};

/// Randomness of a run derives from the config seed; these are its streams.
uint64_t model_seed(uint64_t seed);
uint64_t assembler_seed(uint64_t seed);
uint64_t validation_seed(uint64_t seed);
uint64_t step_seed(uint64_t seed, int64_t step);

class Trainer {
 public:
  Trainer(const RunConfig& config, data::Manifest train, data::Manifest val);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Model, optimizer, assembler and ledger state from a checkpoint written
  /// by the same configuration.
  void restore(const Checkpoint& ckpt);
  Checkpoint snapshot() const;

  /// One update: gpu_batches gpu-batches, gradients averaged, then AdamW.
  /// Throws DivergenceError before touching the parameters if the loss or
  /// a gradient is not finite.
  StepStats train_step();
  MetricRecord validate() const;

  /// Trains up to `until` steps (config iterations when negative). Every
  /// validate_every steps appends a metrics row and a data-seen row and
  /// writes step-<n>.ckpt. On divergence, writes diverged-step-<n>.ckpt
  /// and rethrows.
  void run(const std::filesystem::path& run_dir, int64_t until = -1, std::ostream* log = nullptr);

  int64_t step() const { return step_; }
  const RunConfig& config() const { return config_; }
  Wav2Vec2Model& model() { return *model_; }
  const Wav2Vec2Model& model() const { return *model_; }
  const data::DataSeenLedger& ledger() const { return ledger_; }
  const data::Manifest& train_manifest() const { return train_; }
  const data::WaveformStore& train_audio() const { return train_audio_; }
  const data::WaveformStore& val_audio() const { return val_audio_; }
  const data::BatchAssembler& assembler() const { return *assembler_; }
  double lr_at(int64_t step) const { return lr_(step); }
  double tau_at(int64_t step) const;

 private:
  RunConfig config_;
  data::Manifest train_;
  data::Manifest val_;
  data::WaveformStore train_audio_;
  data::WaveformStore val_audio_;
  std::unique_ptr<Wav2Vec2Model> model_;
  std::unique_ptr<AdamW> optimizer_;
  std::unique_ptr<data::BatchAssembler> assembler_;
  data::DataSeenLedger ledger_;
  CyclicLr lr_;
  int64_t step_ = 0;
};

std::string checkpoint_name(int64_t step);

}  // namespace w2v
