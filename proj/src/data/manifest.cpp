// SPDX-License-Identifier: Apache-2.0
#include "w2v/data/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "w2v/data/wav.hpp"

namespace w2v::data {

namespace fs = std::filesystem;

double Utterance::seconds() const { return static_cast<double>(num_samples) / kSampleRate; }

double Manifest::total_seconds() const {
  double total = 0.0;
  for (const auto& u : entries) total += u.seconds();
  return total;
}

ManifestError::ManifestError(const fs::path& file, int64_t line, const std::string& what)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}

bool valid_transcript_char(char c) { return (c >= 'a' && c <= 'z') || c == ' ' || c == '\''; }

void validate_utterance(const Utterance& u, const fs::path& file, int64_t line) {
  if (u.id.empty()) throw ManifestError(file, line, "empty utterance id");
  if (u.num_samples < kMinSamples) {
    throw ManifestError(file, line,
                        "utterance '" + u.id + "' has " + std::to_string(u.num_samples) +
                            " samples, below the minimum of " + std::to_string(kMinSamples) + " (0.83 s)");
  }
  if (u.num_samples > kMaxSamples) {
    throw ManifestError(file, line,
                        "utterance '" + u.id + "' has " + std::to_string(u.num_samples) +
                            " samples, above the maximum of " + std::to_string(kMaxSamples) + " (30 s)");
  }
  for (char c : u.transcript) {
    if (!valid_transcript_char(c)) {
      throw ManifestError(file, line, "transcript of '" + u.id + "' contains invalid character '" +
                                          std::string(1, c) + "'");
    }
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

Manifest load_manifest(const fs::path& path, const std::string& subset) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.subset = subset.empty() ? path.stem().string() : subset;
  const fs::path base = path.parent_path();
  std::unordered_set<std::string> ids;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw ManifestError(path, lineno, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    Utterance u;
    u.id = fields[0];
    u.path = fields[1];
    if (u.path.is_relative()) u.path = base / u.path;
    const std::string& count = fields[2];
    const auto [end, ec] = std::from_chars(count.data(), count.data() + count.size(), u.num_samples);
    if (ec != std::errc() || end != count.data() + count.size()) {
      throw ManifestError(path, lineno, "num_samples '" + count + "' is not an integer");
    }
    if (fields.size() == 4) u.transcript = fields[3];
    validate_utterance(u, path, lineno);
    if (!ids.insert(u.id).second) throw ManifestError(path, lineno, "duplicate utterance id '" + u.id + "'");
    if (!fs::exists(u.path)) throw ManifestError(path, lineno, "audio file not found: " + u.path.string());
    const int64_t header_samples = wav_num_samples(u.path);
    if (header_samples != u.num_samples) {
      throw ManifestError(path, lineno,
                          "num_samples " + std::to_string(u.num_samples) + " disagrees with WAV header (" +
                              std::to_string(header_samples) + ")");
    }
    manifest.entries.push_back(std::move(u));
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  for (const auto& u : manifest.entries) {
    fs::path audio = u.path;
    const fs::path abs = fs::absolute(audio).lexically_normal();
    const fs::path rel = abs.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") audio = rel;
    out << u.id << '\t' << audio.string() << '\t' << u.num_samples << '\t' << u.transcript << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Split split_validation(const Manifest& manifest, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("validation fraction must lie in (0, 1)");
  Split split;
  split.train.subset = manifest.subset;
  split.val.subset = manifest.subset.empty() ? "val" : manifest.subset + "-val";
  const auto n = static_cast<int64_t>(manifest.size());
  const auto n_val = static_cast<int64_t>(std::llround(fraction * static_cast<double>(n)));
  if (n > 0 && n_val == 0) {
    std::cerr << "warning: validation split of " << fraction << " over " << n
              << " utterances rounds to zero; validation set is empty\n";
  }
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int64_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  std::vector<char> in_val(n, 0);
  for (int64_t i = 0; i < n_val; ++i) in_val[order[i]] = 1;
  for (int64_t i = 0; i < n; ++i) {
    (in_val[i] ? split.val : split.train).entries.push_back(manifest.entries[i]);
  }
  return split;
}

}  // namespace w2v::data
