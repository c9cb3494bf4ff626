// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "w2v/data/manifest.hpp"

namespace w2v::data {

/// Every waveform of a manifest, read once and held in memory.
class WaveformStore {
 public:
  WaveformStore() = default;
  explicit WaveformStore(const Manifest& manifest);

  std::span<const float> operator[](int64_t index) const { return audio_.at(static_cast<size_t>(index)); }
  int64_t size() const { return static_cast<int64_t>(audio_.size()); }

 private:
  std::vector<std::vector<float>> audio_;
};

}  // namespace w2v::data
