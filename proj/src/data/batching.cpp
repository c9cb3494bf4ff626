// SPDX-License-Identifier: Apache-2.0
#include "w2v/data/batching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "w2v/data/wav.hpp"

namespace w2v::data {

using nlohmann::json;

namespace {

// Min-heap order on (seconds, index).
bool later(const QueueItem& a, const QueueItem& b) {
  return a.seconds != b.seconds ? a.seconds > b.seconds : a.index > b.index;
}

json items_to_json(const std::vector<QueueItem>& items) {
  json out = json::array();
  for (const auto& it : items) out.push_back(it.index);
  return out;
}

}  // namespace

void AssemblerConfig::validate() const {
  if (!(threshold_seconds > 0.0)) throw std::invalid_argument("batch threshold must be positive");
  if (bin_size < 1) throw std::invalid_argument("bin size must be positive");
  if (queue_length < 1) throw std::invalid_argument("queue length must be positive");
  if (!(max_spread_seconds >= 0.0)) throw std::invalid_argument("max spread must be non-negative");
  if (max_consecutive_discards < 1) throw std::invalid_argument("max consecutive discards must be positive");
}

double GpuBatch::min_seconds() const {
  return static_cast<double>(*std::min_element(lengths.begin(), lengths.end())) / kSampleRate;
}

double GpuBatch::max_seconds() const {
  return static_cast<double>(*std::max_element(lengths.begin(), lengths.end())) / kSampleRate;
}

std::vector<std::vector<int64_t>> make_bins(const Manifest& manifest, int64_t bin_size) {
  if (manifest.empty()) throw std::invalid_argument("cannot bin an empty manifest");
  if (bin_size < 1) throw std::invalid_argument("bin size must be positive");
  std::vector<int64_t> order(manifest.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return manifest.entries[a].num_samples < manifest.entries[b].num_samples;
  });
  std::vector<std::vector<int64_t>> bins;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(bin_size)) {
    const size_t end = std::min(order.size(), i + static_cast<size_t>(bin_size));
    bins.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return bins;
}

BinSampler::BinSampler(int64_t bin_id, std::vector<QueueItem> members, int64_t queue_length)
    : id_(bin_id), queue_length_(queue_length), members_(std::move(members)) {}

void BinSampler::reset(Rng& rng) {
  pool_ = members_;
  queue_.clear();
  consecutive_discards = 0;
  for (int64_t i = static_cast<int64_t>(pool_.size()) - 1; i > 0; --i) {
    std::swap(pool_[i], pool_[rng.uniform_int(0, i)]);
  }
}

void BinSampler::refill() {
  while (static_cast<int64_t>(queue_.size()) < queue_length_ && !pool_.empty()) {
    queue_.push_back(pool_.back());
    pool_.pop_back();
    std::push_heap(queue_.begin(), queue_.end(), later);
  }
}

QueueItem BinSampler::pop_shortest() {
  std::pop_heap(queue_.begin(), queue_.end(), later);
  const QueueItem item = queue_.back();
  queue_.pop_back();
  return item;
}

void BinSampler::return_to_pool(const std::vector<QueueItem>& items, Rng& rng) {
  for (const auto& it : items) {
    pool_.push_back(it);
    std::swap(pool_.back(), pool_[rng.uniform_int(0, static_cast<int64_t>(pool_.size()) - 1)]);
  }
}

Assembly BinSampler::next_gpu_batch(Rng& rng, double threshold_seconds, double max_spread_seconds) {
  if (remaining() == 0) throw std::logic_error("bin " + std::to_string(id_) + " is exhausted");
  Assembly a;
  refill();
  double total = 0.0;
  for (;;) {
    const QueueItem item = pop_shortest();
    a.items.push_back(item);
    total += item.seconds;
    refill();
    if (queue_.empty()) {
      a.remnant = true;
      break;
    }
    if (total + queue_.front().seconds > threshold_seconds) {
      a.next_seconds = queue_.front().seconds;
      break;
    }
  }
  // Refills can admit shorter utterances after longer pops.
  std::sort(a.items.begin(), a.items.end(), [](const QueueItem& x, const QueueItem& y) { return later(y, x); });
  if (a.items.back().seconds - a.items.front().seconds > max_spread_seconds) {
    a.kind = AssemblyKind::kDiscard;
    return_to_pool(a.items, rng);
  }
  return a;
}

Assembly BinSampler::force_batch(Rng& rng, double threshold_seconds, double max_spread_seconds) {
  Assembly a = next_gpu_batch(rng, threshold_seconds, max_spread_seconds);
  if (a.kind == AssemblyKind::kBatch) return a;
  // next_gpu_batch returned the items to the pool; take them back out.
  std::vector<QueueItem> items = a.items;
  for (const auto& it : items) {
    const auto pos = std::find_if(pool_.begin(), pool_.end(), [&](const QueueItem& p) { return p.index == it.index; });
    pool_.erase(pos);
  }
  Assembly forced;
  forced.remnant = true;
  size_t keep = 1;
  while (keep < items.size() && items[keep].seconds - items[0].seconds <= max_spread_seconds) ++keep;
  forced.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep));
  return_to_pool(std::vector<QueueItem>(items.begin() + static_cast<std::ptrdiff_t>(keep), items.end()), rng);
  return forced;
}

json BinSampler::state() const {
  return {{"pool", items_to_json(pool_)},
          {"queue", items_to_json(queue_)},
          {"consecutive_discards", consecutive_discards}};
}

void BinSampler::set_state(const json& state) {
  auto lookup = [&](int64_t index) {
    for (const auto& m : members_) {
      if (m.index == index) return m;
    }
    throw std::runtime_error("assembler state names utterance " + std::to_string(index) + " outside bin " +
                             std::to_string(id_));
  };
  pool_.clear();
  queue_.clear();
  for (const auto& i : state.at("pool")) pool_.push_back(lookup(i.get<int64_t>()));
  for (const auto& i : state.at("queue")) queue_.push_back(lookup(i.get<int64_t>()));
  if (!std::is_heap(queue_.begin(), queue_.end(), later)) throw std::runtime_error("assembler queue state is not a heap");
  consecutive_discards = state.at("consecutive_discards").get<int64_t>();
}

BatchAssembler::BatchAssembler(const Manifest& manifest, const AssemblerConfig& config, uint64_t seed)
    : manifest_(&manifest), config_(config), rng_(seed) {
  config_.validate();
  const auto bins = make_bins(manifest, config_.bin_size);
  for (size_t b = 0; b < bins.size(); ++b) {
    std::vector<QueueItem> members;
    for (int64_t i : bins[b]) members.push_back({manifest.entries[i].seconds(), i});
    bins_.emplace_back(static_cast<int64_t>(b), std::move(members), config_.queue_length);
  }
}

void BatchAssembler::start_traversal() {
  for (auto& bin : bins_) bin.reset(rng_);
  ++traversals_;
}

GpuBatch BatchAssembler::to_batch(const Assembly& a, int64_t bin) const {
  GpuBatch batch;
  batch.bin = bin;
  batch.remnant = a.remnant;
  batch.next_seconds = a.next_seconds;
  for (const auto& it : a.items) {
    const auto& u = manifest_->entries[it.index];
    batch.indices.push_back(it.index);
    batch.ids.push_back(u.id);
    batch.lengths.push_back(u.num_samples);
    batch.total_seconds += u.seconds();
  }
  return batch;
}

GpuBatch BatchAssembler::next() {
  for (;;) {
    int64_t total = 0;
    for (const auto& bin : bins_) total += bin.remaining();
    if (total == 0) {
      start_traversal();
      continue;
    }
    int64_t pick = rng_.uniform_int(0, total - 1);
    size_t b = 0;
    while (pick >= bins_[b].remaining()) pick -= bins_[b++].remaining();
    BinSampler& bin = bins_[b];
    Assembly a = bin.consecutive_discards >= config_.max_consecutive_discards
                     ? bin.force_batch(rng_, config_.threshold_seconds, config_.max_spread_seconds)
                     : bin.next_gpu_batch(rng_, config_.threshold_seconds, config_.max_spread_seconds);
    if (a.kind == AssemblyKind::kDiscard) {
      ++discards_;
      ++bin.consecutive_discards;
      continue;
    }
    bin.consecutive_discards = 0;
    return to_batch(a, static_cast<int64_t>(b));
  }
}

json BatchAssembler::state() const {
  json bins = json::array();
  for (const auto& b : bins_) bins.push_back(b.state());
  return {{"rng", rng_.state()}, {"traversals", traversals_}, {"discards", discards_}, {"bins", bins}};
}

void BatchAssembler::set_state(const json& state) {
  const auto& bins = state.at("bins");
  if (bins.size() != bins_.size()) throw std::runtime_error("assembler state has a different number of bins");
  rng_.set_state(state.at("rng").get<std::string>());
  traversals_ = state.at("traversals").get<int64_t>();
  discards_ = state.at("discards").get<int64_t>();
  for (size_t b = 0; b < bins_.size(); ++b) bins_[b].set_state(bins[b]);
}

CollatedBatch pad_and_collate(std::span<const std::span<const float>> audio, int64_t total_stride) {
  if (audio.empty()) throw std::invalid_argument("cannot collate an empty batch");
  CollatedBatch out;
  int64_t max_len = 0;
  for (const auto& a : audio) max_len = std::max<int64_t>(max_len, static_cast<int64_t>(a.size()));
  const auto n = static_cast<int64_t>(audio.size());
  out.waveforms = Tensor({n, max_len}, 0.0);
  out.max_frames = max_len / total_stride;
  for (int64_t i = 0; i < n; ++i) {
    const auto len = static_cast<int64_t>(audio[i].size());
    for (int64_t s = 0; s < len; ++s) out.waveforms.at(i, s) = audio[i][s];
    out.lengths.push_back(len);
    out.frames.push_back(len / total_stride);
    std::vector<char> mask(static_cast<size_t>(out.max_frames), 0);
    for (int64_t t = out.frames.back(); t < out.max_frames; ++t) mask[t] = 1;
    out.pad_mask.push_back(std::move(mask));
  }
  return out;
}

DataSeen data_seen(double batch_seconds, int64_t iterations, double dataset_hours) {
  if (batch_seconds < 0.0 || iterations < 0 || !(dataset_hours > 0.0)) {
    throw std::invalid_argument("data_seen needs non-negative batch seconds and iterations and positive dataset hours");
  }
  DataSeen d;
  d.hours_upper = batch_seconds * static_cast<double>(iterations) / 3600.0;
  d.epochs_upper = d.hours_upper / dataset_hours;
  return d;
}

void DataSeenLedger::record(double upper_bound_seconds, std::span<const GpuBatch> batches) {
  ++iterations_;
  upper_ += upper_bound_seconds;
  for (const auto& b : batches) {
    measured_ += b.total_seconds;
    for (int64_t i : b.indices) {
      if (i >= static_cast<int64_t>(repeats_.size())) repeats_.resize(i + 1, 0);
      ++repeats_[i];
    }
  }
}

int64_t DataSeenLedger::max_repeats() const {
  return repeats_.empty() ? 0 : *std::max_element(repeats_.begin(), repeats_.end());
}

int64_t DataSeenLedger::min_repeats() const {
  return repeats_.empty() ? 0 : *std::min_element(repeats_.begin(), repeats_.end());
}

void DataSeenLedger::write_csv_header(std::ostream& out) {
  out << "iteration,upper_bound_seconds,measured_seconds,max_repeats\n";
}

void DataSeenLedger::write_csv_row(std::ostream& out) const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%lld\n", static_cast<long long>(iterations_), upper_, measured_,
                static_cast<long long>(max_repeats()));
  out << buf;
}

json DataSeenLedger::state() const {
  return {{"iterations", iterations_}, {"upper", upper_}, {"measured", measured_}, {"repeats", repeats_}};
}

void DataSeenLedger::set_state(const json& state) {
  iterations_ = state.at("iterations").get<int64_t>();
  upper_ = state.at("upper").get<double>();
  measured_ = state.at("measured").get<double>();
  repeats_ = state.at("repeats").get<std::vector<int64_t>>();
}

}  // namespace w2v::data
