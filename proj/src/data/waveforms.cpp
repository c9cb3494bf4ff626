// SPDX-License-Identifier: Apache-2.0
#include "w2v/data/waveforms.hpp"

#include <stdexcept>

#include "w2v/data/wav.hpp"

namespace w2v::data {

WaveformStore::WaveformStore(const Manifest& manifest) {
  audio_.reserve(manifest.size());
  for (const auto& u : manifest.entries) {
    audio_.push_back(read_wav(u.path));
    if (static_cast<int64_t>(audio_.back().size()) != u.num_samples) {
      throw std::runtime_error(u.path.string() + ": sample count changed since the manifest was written");
    }
  }
}

}  // namespace w2v::data
