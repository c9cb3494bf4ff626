// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "w2v/data/manifest.hpp"
#include "w2v/rng.hpp"

namespace w2v::data {

/// Synthetic speech: every transcript character is a tone with a fixed frequency
/// and phase under a sin^2 hump spanning its segment, plus white noise.
struct SynthConfig {
  uint64_t seed = 1;
  int64_t count = 100;
  double min_seconds = 1.0;
  double max_seconds = 3.0;
  std::vector<std::string> vocab;
  /// Nominal character duration; the transcript is sized so each character
  /// gets at least this long.
  double char_seconds = 0.12;
  /// Character durations are drawn proportional to U(1 - j, 1 + j).
  double duration_jitter = 0.5;
  double noise_std = 0.05;
  double amplitude = 0.5;
};

std::vector<std::string> default_vocab();

/// Tone frequency (Hz) of a transcript character. Every frequency is a
/// multiple of the 50 Hz frame rate.
double char_frequency(char c);
/// Tone phase of a character at t = 0. With the frequencies above, every
/// 20 ms frame of a character starts at this phase.
double char_phase(char c);

struct SynthPlanEntry {
  std::string id;
  int64_t num_samples;
  std::string transcript;
};

/// Durations and transcripts without rendering audio.
std::vector<SynthPlanEntry> plan_synth_corpus(const SynthConfig& config);

/// Sample offsets of the n_chars + 1 character boundaries, first 0 and last
/// num_samples. Consumes one uniform draw per character.
std::vector<int64_t> char_boundaries(int64_t n_chars, int64_t num_samples, double jitter, Rng& rng);

/// Renders one utterance. Deterministic given `seed`.
std::vector<float> render_transcript(const std::string& transcript, int64_t num_samples, uint64_t seed,
                                     const SynthConfig& config);

/// Writes `<id>.wav` files and `manifest.tsv` into `out_dir`.
Manifest synth_corpus(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace w2v::data
