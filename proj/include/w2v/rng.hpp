// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace w2v {

/// Seeded pseudo-random stream. All draws are computed from the raw 64-bit
/// engine output so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }
  /// Uniform integer in [lo, hi] without modulo bias.
  int64_t uniform_int(int64_t lo, int64_t hi);

  /// Independent stream derived from this stream's seed and `stream_id`.
  /// Does not advance this stream.
  Rng fork(uint64_t stream_id) const;

  std::string state() const;
  void set_state(const std::string& state);

  bool operator==(const Rng& other) const { return seed_ == other.seed_ && engine_ == other.engine_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

uint64_t splitmix64(uint64_t x);
/// Stable 64-bit FNV-1a hash of a byte string.
uint64_t fnv1a64(const std::string& bytes);

}  // namespace w2v
