// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "w2v/data/manifest.hpp"
#include "w2v/rng.hpp"
#include "w2v/tensor.hpp"

namespace w2v::data {

struct AssemblerConfig {
  /// Speech seconds per gpu-batch; a batch never exceeds it unless it holds a
  /// single longer utterance.
  double threshold_seconds = 150.0;
  int64_t bin_size = 5000;
  int64_t queue_length = 50;
  double max_spread_seconds = 10.0;
  int64_t max_consecutive_discards = 8;

  void validate() const;
};

struct GpuBatch {
  std::vector<int64_t> indices;  // manifest positions, shortest first
  std::vector<std::string> ids;
  std::vector<int64_t> lengths;  // samples
  double total_seconds = 0.0;
  int64_t bin = 0;
  /// The bin ran out before the batch was full (or a forced split after
  /// repeated discards).
  bool remnant = false;
  /// Duration of the queued utterance that did not fit; negative if none.
  double next_seconds = -1.0;

  double min_seconds() const;
  double max_seconds() const;
};

/// Manifest positions sorted by duration (ties by position), cut into
/// consecutive bins of bin_size.
std::vector<std::vector<int64_t>> make_bins(const Manifest& manifest, int64_t bin_size = 5000);

/// Queue entry of the shortest-first priority queue.
struct QueueItem {
  double seconds;
  int64_t index;
};

enum class AssemblyKind { kBatch, kDiscard };

struct Assembly {
  AssemblyKind kind = AssemblyKind::kBatch;
  std::vector<QueueItem> items;  // shortest first
  bool remnant = false;
  double next_seconds = -1.0;
};

/// One bin's sampling state: a shuffled pool feeding a bounded min-queue.
class BinSampler {
 public:
  BinSampler() = default;
  BinSampler(int64_t bin_id, std::vector<QueueItem> members, int64_t queue_length);

  /// Starts a new traversal: every member goes back into the pool.
  void reset(Rng& rng);
  int64_t remaining() const { return static_cast<int64_t>(pool_.size() + queue_.size()); }
  int64_t id() const { return id_; }

  /// Pops shortest utterances while the cumulative duration stays within the
  /// threshold (at least one). Batches whose spread exceeds max_spread are
  /// returned as kDiscard with their utterances put back into the pool.
  Assembly next_gpu_batch(Rng& rng, double threshold_seconds, double max_spread_seconds);
  /// Emits the longest spread-valid shortest-first prefix as a remnant.
  Assembly force_batch(Rng& rng, double threshold_seconds, double max_spread_seconds);

  int64_t consecutive_discards = 0;

  nlohmann::json state() const;
  void set_state(const nlohmann::json& state);

 private:
  void refill();
  QueueItem pop_shortest();
  void return_to_pool(const std::vector<QueueItem>& items, Rng& rng);

  int64_t id_ = 0;
  int64_t queue_length_ = 50;
  std::vector<QueueItem> members_;
  std::vector<QueueItem> pool_;
  std::vector<QueueItem> queue_;  // binary min-heap
};

/// Endless stream of gpu-batches over a manifest. Bins are chosen at random
/// weighted by their remaining utterances; when all bins are exhausted a new
/// traversal starts.
class BatchAssembler {
 public:
  BatchAssembler(const Manifest& manifest, const AssemblerConfig& config, uint64_t seed);

  GpuBatch next();

  int64_t traversals() const { return traversals_; }
  int64_t discards() const { return discards_; }
  int64_t num_bins() const { return static_cast<int64_t>(bins_.size()); }
  const AssemblerConfig& config() const { return config_; }

  nlohmann::json state() const;
  void set_state(const nlohmann::json& state);

 private:
  void start_traversal();
  GpuBatch to_batch(const Assembly& a, int64_t bin) const;

  const Manifest* manifest_;
  AssemblerConfig config_;
  Rng rng_;
  std::vector<BinSampler> bins_;
  int64_t traversals_ = 0;
  int64_t discards_ = 0;
};

struct CollatedBatch {
  Tensor waveforms;                       // [n, max_samples], zero padded
  std::vector<int64_t> lengths;           // samples
  std::vector<int64_t> frames;            // floor(length / stride)
  int64_t max_frames = 0;
  std::vector<std::vector<char>> pad_mask;  // [n][max_frames], 1 = padding
};

CollatedBatch pad_and_collate(std::span<const std::span<const float>> audio, int64_t total_stride = 320);

struct DataSeen {
  double hours_upper = 0.0;
  double epochs_upper = 0.0;
};

inline constexpr double kReferenceDatasetHours = 912.0;

DataSeen data_seen(double batch_seconds, int64_t iterations, double dataset_hours = kReferenceDatasetHours);

/// Upper-bound and measured speech seconds plus per-utterance repeat counts.
class DataSeenLedger {
 public:
  explicit DataSeenLedger(int64_t num_utterances = 0) : repeats_(num_utterances, 0) {}

  void record(double upper_bound_seconds, std::span<const GpuBatch> batches);

  int64_t iterations() const { return iterations_; }
  double upper_bound_seconds() const { return upper_; }
  double measured_seconds() const { return measured_; }
  int64_t max_repeats() const;
  int64_t min_repeats() const;
  const std::vector<int64_t>& repeats() const { return repeats_; }

  static void write_csv_header(std::ostream& out);
  void write_csv_row(std::ostream& out) const;

  nlohmann::json state() const;
  void set_state(const nlohmann::json& state);

 private:
  int64_t iterations_ = 0;
  double upper_ = 0.0;
  double measured_ = 0.0;
  std::vector<int64_t> repeats_;
};

}  // namespace w2v::data
