// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "w2v/rng.hpp"

namespace w2v::data {

inline constexpr int64_t kMinSamples = 13280;   // 0.83 s
inline constexpr int64_t kMaxSamples = 480000;  // 30 s

struct Utterance {
  std::string id;
  std::filesystem::path path;
  int64_t num_samples = 0;
  std::string transcript;

  double seconds() const;
  bool operator==(const Utterance&) const = default;
};

struct Manifest {
  std::string subset;
  std::vector<Utterance> entries;

  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  double total_seconds() const;
  bool operator==(const Manifest&) const = default;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(const std::filesystem::path& file, int64_t line, const std::string& what);
  int64_t line() const { return line_; }

 private:
  int64_t line_;
};

/// Reads `id<TAB>path<TAB>num_samples<TAB>transcript`. Relative audio paths resolve
/// against the manifest's directory; num_samples is checked against the WAV header.
Manifest load_manifest(const std::filesystem::path& path, const std::string& subset = "");
/// Writes paths relative to the manifest directory when they live under it.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Checks duration bounds, unique ids and transcript alphabet. Throws ManifestError.
void validate_utterance(const Utterance& u, const std::filesystem::path& file, int64_t line);
bool valid_transcript_char(char c);

struct Split {
  Manifest train;
  Manifest val;
};

/// |val| = round(fraction * N); the rest stays in train in original order.
Split split_validation(const Manifest& manifest, double fraction, Rng& rng);

}  // namespace w2v::data
