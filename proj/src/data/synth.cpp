// SPDX-License-Identifier: Apache-2.0
#include "w2v/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "w2v/data/wav.hpp"
#include "w2v/rng.hpp"

namespace w2v::data {

namespace fs = std::filesystem;

std::vector<std::string> default_vocab() {
  return {"a",    "an",   "the",  "cat",   "dog",  "sat", "on",   "mat",  "big",  "red",  "sun",  "run",
          "fox",  "jump", "over", "lazy",  "blue", "sky", "we",   "go",   "up",   "it's", "low",  "high",
          "sea",  "ship", "quiz", "vex",   "jolt", "zinc", "kite", "wax",  "moon", "yes",  "play", "hop"};
}

double char_frequency(char c) {
  int index;
  if (c >= 'a' && c <= 'z') {
    index = c - 'a';
  } else if (c == ' ') {
    index = 26;
  } else if (c == '\'') {
    index = 27;
  } else {
    throw std::invalid_argument(std::string("no tone for character '") + c + "'");
  }
  return 250.0 + 100.0 * index;
}

double char_phase(char c) {
  const double index = (char_frequency(c) - 250.0) / 100.0;
  const double golden = 0.6180339887498949;
  return 2.0 * std::numbers::pi * (index * golden - std::floor(index * golden));
}

std::vector<SynthPlanEntry> plan_synth_corpus(const SynthConfig& config) {
  if (config.vocab.empty()) throw std::invalid_argument("synthetic corpus vocabulary is empty");
  for (const auto& word : config.vocab) {
    if (word.empty()) throw std::invalid_argument("synthetic corpus vocabulary contains an empty word");
    for (char c : word) {
      if (!valid_transcript_char(c) || c == ' ') {
        throw std::invalid_argument("vocabulary word '" + word + "' has a character outside a-z and apostrophe");
      }
    }
  }
  const double lo = static_cast<double>(kMinSamples) / kSampleRate;
  const double hi = static_cast<double>(kMaxSamples) / kSampleRate;
  if (config.min_seconds < lo || config.max_seconds > hi || config.min_seconds > config.max_seconds) {
    throw std::invalid_argument("synthetic durations must satisfy 0.83 <= min <= max <= 30 seconds");
  }
  if (config.count < 0) throw std::invalid_argument("synthetic corpus count is negative");
  Rng rng(config.seed);
  std::vector<SynthPlanEntry> plan;
  plan.reserve(config.count);
  for (int64_t i = 0; i < config.count; ++i) {
    const double seconds = rng.uniform(config.min_seconds, config.max_seconds);
    int64_t samples = std::llround(seconds * kSampleRate);
    samples = std::clamp(samples, kMinSamples, kMaxSamples);
    const auto max_chars = std::max<int64_t>(1, static_cast<int64_t>(seconds / config.char_seconds));
    std::string text;
    for (;;) {
      const auto& word = config.vocab[rng.uniform_int(0, static_cast<int64_t>(config.vocab.size()) - 1)];
      const size_t extra = word.size() + (text.empty() ? 0 : 1);
      if (!text.empty() && static_cast<int64_t>(text.size() + extra) > max_chars) break;
      if (!text.empty()) text += ' ';
      text += word;
      if (static_cast<int64_t>(text.size()) >= max_chars) break;
    }
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06lld", static_cast<long long>(i));
    plan.push_back({id, samples, std::move(text)});
  }
  return plan;
}

std::vector<int64_t> char_boundaries(int64_t n_chars, int64_t num_samples, double jitter, Rng& rng) {
  if (!(jitter >= 0.0 && jitter < 1.0)) throw std::invalid_argument("duration jitter must be in [0, 1)");
  std::vector<double> cum(static_cast<size_t>(n_chars) + 1, 0.0);
  for (int64_t c = 0; c < n_chars; ++c) cum[c + 1] = cum[c] + rng.uniform(1.0 - jitter, 1.0 + jitter);
  std::vector<int64_t> out(cum.size());
  for (size_t i = 0; i < cum.size(); ++i) {
    out[i] = static_cast<int64_t>(std::llround(cum[i] / cum.back() * static_cast<double>(num_samples)));
  }
  out.back() = num_samples;
  return out;
}

std::vector<float> render_transcript(const std::string& transcript, int64_t num_samples, uint64_t seed,
                                     const SynthConfig& config) {
  if (transcript.empty()) throw std::invalid_argument("cannot render an empty transcript");
  Rng rng(seed);
  std::vector<float> audio(num_samples);
  const auto n_chars = static_cast<int64_t>(transcript.size());
  const auto bounds = char_boundaries(n_chars, num_samples, config.duration_jitter, rng);
  for (int64_t c = 0; c < n_chars; ++c) {
    const int64_t begin = bounds[c];
    const int64_t end = bounds[c + 1];
    const double freq = char_frequency(transcript[c]);
    const double phase = char_phase(transcript[c]);
    const double half = 0.5 * static_cast<double>(end - begin);
    for (int64_t s = begin; s < end; ++s) {
      const double edge = std::min(static_cast<double>(s - begin), static_cast<double>(end - 1 - s)) + 0.5;
      const double envelope = std::pow(std::sin(0.5 * std::numbers::pi * std::min(1.0, edge / half)), 2);
      const double t = static_cast<double>(s) / kSampleRate;
      audio[s] = static_cast<float>(config.amplitude * envelope * std::sin(2.0 * std::numbers::pi * freq * t + phase));
    }
  }
  for (auto& x : audio) x += static_cast<float>(config.noise_std * rng.normal());
  return audio;
}

Manifest synth_corpus(const SynthConfig& config, const fs::path& out_dir) {
  const auto plan = plan_synth_corpus(config);
  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.subset = "synth";
  Rng seeds(config.seed ^ 0x5eed5eedULL);
  for (const auto& entry : plan) {
    const auto audio = render_transcript(entry.transcript, entry.num_samples, seeds.next_u64(), config);
    const fs::path wav = out_dir / (entry.id + ".wav");
    write_wav(wav, audio);
    manifest.entries.push_back({entry.id, wav, entry.num_samples, entry.transcript});
  }
  save_manifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

}  // namespace w2v::data
