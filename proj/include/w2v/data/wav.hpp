// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace w2v::data {

inline constexpr int64_t kSampleRate = 16000;

/// Writes 16 kHz mono PCM16. Samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const float> samples);
/// Reads a 16 kHz mono PCM16 file into [-1, 1] floats.
std::vector<float> read_wav(const std::filesystem::path& path);
/// Sample count from the header alone.
int64_t wav_num_samples(const std::filesystem::path& path);

}  // namespace w2v::data
