// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "w2v/model/wav2vec2.hpp"

namespace w2v {

/// Every key of a run: data, model dims, pre-training and fine-tuning.
/// Serialized as flat `key = value` text.
struct RunConfig {
  std::string preset = "toy";
  uint64_t seed = 1;

  std::string train_manifest;
  std::string val_manifest;  // empty: split val_fraction off the training manifest
  double val_fraction = 0.05;

  int64_t enc_channels = 64;
  int64_t layers = 2;
  int64_t dim = 64;
  int64_t heads = 4;
  int64_t ffn_dim = 128;
  int64_t pos_kernel = 16;
  int64_t pos_groups = 4;
  int64_t codebook_size = 32;
  int64_t codeword_dim = 16;
  int64_t sim_dim = 32;
  double dropout = 0.1;
  double classifier_init_std = 1.0;

  /// Aggregate speech seconds per update, split over gpu_batches.
  double batch_seconds = 8.0;
  int64_t gpu_batches = 1;
  int64_t iterations = 2000;
  std::string lr_kind = "fixed";  // const | sub | lin | fixed
  double max_lr = 2e-3;           // used when lr_kind = fixed
  double lr_ref = 5e-4;
  double lr_ref_seconds = 6000.0;
  int64_t half_cycle = 125;
  int64_t num_cycles = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-6;
  double weight_decay = 0.01;

  int64_t num_distractors = 5;  // k
  double mask_prob = 0.5;
  int64_t mask_span = 10;
  double logit_temperature = 0.1;
  double lambda_d = 0.1;
  double lambda_p = 10.0;
  double tau_start = 2.0;
  double tau_floor = 0.5;
  double tau_floor_fraction = 0.75;

  int64_t validate_every = 500;
  std::string select_on = "ssl";  // ssl | lc

  int64_t bin_size = 5000;
  int64_t queue_length = 50;
  double max_spread_seconds = 10.0;
  int64_t max_consecutive_discards = 8;

  int64_t ft_iterations = 600;
  double ft_batch_seconds = 20.0;
  double ft_base_lr = 3e-5;
  double ft_peak_lr = 3e-3;
  double ft_final_lr = 1.5e-4;
  int64_t ft_freeze_context_steps = 150;
  double ft_mask_prob = 0.05;
  int64_t ft_mask_span = 10;
  double ft_dropout = 0.1;
  /// "ssl" initializes from a checkpoint; "scratch" from a random model.
  std::string ft_init = "ssl";
  /// Labeled data; empty falls back to the pre-training train / val manifests.
  std::string ft_train_manifest;
  std::string ft_eval_manifest;

  static RunConfig preset_config(const std::string& name);

  ModelConfig model() const;
  SslOptions ssl_options() const;
  double gpu_threshold_seconds() const { return batch_seconds / static_cast<double>(gpu_batches); }
  /// The peak of the cyclic schedule, from lr_kind.
  double peak_lr() const;

  /// Throws ConfigError listing every invalid key.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  std::string to_text() const;
  /// FNV-1a of the canonical JSON dump.
  uint64_t hash() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; '#' starts a comment; blank lines ignored.
KeyValues parse_key_values(const std::string& text, const std::string& source = "config");
KeyValues read_key_values(const std::filesystem::path& path);
/// `key=value` command-line overrides.
std::pair<std::string, std::string> parse_override(const std::string& arg);

/// Starts from the preset named by a `preset` key (default toy), then applies
/// every pair in order. Unknown keys and unparsable values are collected and
/// reported together.
RunConfig resolve_config(const KeyValues& pairs);

/// Names of all keys, in serialization order.
std::vector<std::string> config_keys();

}  // namespace w2v
