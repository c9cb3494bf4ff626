// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "w2v/data/manifest.hpp"
#include "w2v/data/synth.hpp"
#include "w2v/data/wav.hpp"

namespace fs = std::filesystem;
using namespace w2v;
using namespace w2v::data;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("w2v-dataset-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_silence(const fs::path& path, int64_t samples) {
  std::vector<float> zeros(samples, 0.0f);
  write_wav(path, zeros);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Manifest three_rows(const fs::path& dir) {
  Manifest m;
  m.subset = "train";
  const int64_t lengths[] = {13280, 16000, 480000};
  for (int i = 0; i < 3; ++i) {
    const auto wav = dir / ("u" + std::to_string(i) + ".wav");
    write_silence(wav, lengths[i]);
    m.entries.push_back({"u" + std::to_string(i), wav, lengths[i], i == 1 ? "" : "it's a cat"});
  }
  return m;
}

// Magnitude of the DFT of x at frequency f (Hz).
double dft_magnitude(std::span<const float> x, double f) {
  double re = 0.0;
  double im = 0.0;
  for (size_t n = 0; n < x.size(); ++n) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(n) / kSampleRate;
    re += x[n] * std::cos(w);
    im -= x[n] * std::sin(w);
  }
  return std::hypot(re, im);
}

}  // namespace

TEST(Wav, RoundTripWithinQuantization) {
  TempDir dir;
  std::vector<float> samples = {0.0f, 0.5f, -0.5f, 0.999f, -1.0f, 1.5f};
  write_wav(dir.path() / "x.wav", samples);
  const auto back = read_wav(dir.path() / "x.wav");
  ASSERT_EQ(back.size(), samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    EXPECT_NEAR(back[i], std::clamp(samples[i], -1.0f, 1.0f), 1.0 / 32767.0);
  }
  EXPECT_EQ(wav_num_samples(dir.path() / "x.wav"), 6);
}

TEST(Wav, RejectsNonWav) {
  TempDir dir;
  write_text(dir.path() / "bad.wav", "not audio at all, definitely");
  EXPECT_THROW(read_wav(dir.path() / "bad.wav"), std::runtime_error);
}

TEST(Manifest, ThreeRowFileLoads) {
  TempDir dir;
  const Manifest m = three_rows(dir.path());
  save_manifest(m, dir.path() / "train.tsv");
  const Manifest loaded = load_manifest(dir.path() / "train.tsv", "train");
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded, m);
}

TEST(Manifest, EmptyFileIsEmptyManifest) {
  TempDir dir;
  write_text(dir.path() / "empty.tsv", "");
  EXPECT_TRUE(load_manifest(dir.path() / "empty.tsv").empty());
}

TEST(Manifest, ShortUtteranceRejectedNamingBound) {
  TempDir dir;
  write_silence(dir.path() / "a.wav", 1000);
  write_text(dir.path() / "m.tsv", "a\ta.wav\t1000\thello\n");
  try {
    load_manifest(dir.path() / "m.tsv");
    FAIL() << "expected rejection";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("13280"), std::string::npos);
  }
}

TEST(Manifest, LongUtteranceRejected) {
  TempDir dir;
  write_silence(dir.path() / "a.wav", 480001);
  write_text(dir.path() / "m.tsv", "a\ta.wav\t480001\t\n");
  EXPECT_THROW(load_manifest(dir.path() / "m.tsv"), ManifestError);
}

TEST(Manifest, MalformedRowReportsLineNumber) {
  TempDir dir;
  write_silence(dir.path() / "a.wav", 16000);
  write_text(dir.path() / "m.tsv", "a\ta.wav\t16000\thi\nb\tonly-two-fields\n");
  try {
    load_manifest(dir.path() / "m.tsv");
    FAIL() << "expected rejection";
  } catch (const ManifestError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  write_text(dir.path() / "n.tsv", "a\ta.wav\tsixteen\thi\n");
  EXPECT_THROW(load_manifest(dir.path() / "n.tsv"), ManifestError);
}

TEST(Manifest, DuplicateIdsMissingFilesAndHeaderMismatchRejected) {
  TempDir dir;
  write_silence(dir.path() / "a.wav", 16000);
  write_text(dir.path() / "dup.tsv", "a\ta.wav\t16000\t\na\ta.wav\t16000\t\n");
  EXPECT_THROW(load_manifest(dir.path() / "dup.tsv"), ManifestError);
  write_text(dir.path() / "missing.tsv", "a\tnope.wav\t16000\t\n");
  EXPECT_THROW(load_manifest(dir.path() / "missing.tsv"), ManifestError);
  write_text(dir.path() / "mismatch.tsv", "a\ta.wav\t16001\t\n");
  EXPECT_THROW(load_manifest(dir.path() / "mismatch.tsv"), ManifestError);
  write_text(dir.path() / "chars.tsv", "a\ta.wav\t16000\tHello\n");
  EXPECT_THROW(load_manifest(dir.path() / "chars.tsv"), ManifestError);
}

TEST(SplitValidation, FivePercentOfHundred) {
  Manifest m;
  for (int i = 0; i < 100; ++i) m.entries.push_back({"u" + std::to_string(i), "x.wav", 16000, ""});
  Rng rng(3);
  const auto split = split_validation(m, 0.05, rng);
  EXPECT_EQ(split.train.size(), 95u);
  EXPECT_EQ(split.val.size(), 5u);
}

TEST(SplitValidation, RoundingToZeroKeepsEverything) {
  Manifest m;
  for (int i = 0; i < 10; ++i) m.entries.push_back({"u" + std::to_string(i), "x.wav", 16000, ""});
  Rng rng(3);
  const auto split = split_validation(m, 0.01, rng);
  EXPECT_EQ(split.train.size(), 10u);
  EXPECT_EQ(split.val.size(), 0u);
}

TEST(SplitValidation, EmptyAndInvalidFraction) {
  Rng rng(1);
  const auto split = split_validation(Manifest{}, 0.05, rng);
  EXPECT_TRUE(split.train.empty());
  EXPECT_TRUE(split.val.empty());
  EXPECT_THROW(split_validation(Manifest{}, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(split_validation(Manifest{}, 1.0, rng), std::invalid_argument);
}

TEST(SplitValidation, DeterministicPartition) {
  Manifest m;
  for (int i = 0; i < 57; ++i) m.entries.push_back({"u" + std::to_string(i), "x.wav", 16000, ""});
  for (uint64_t seed : {1u, 2u, 99u}) {
    Rng a(seed);
    Rng b(seed);
    const auto s1 = split_validation(m, 0.2, a);
    const auto s2 = split_validation(m, 0.2, b);
    EXPECT_EQ(s1.train, s2.train);
    EXPECT_EQ(s1.val, s2.val);
    std::multiset<std::string> all;
    for (const auto& u : s1.train.entries) all.insert(u.id);
    for (const auto& u : s1.val.entries) all.insert(u.id);
    EXPECT_EQ(all.size(), 57u);
    EXPECT_EQ(std::set<std::string>(all.begin(), all.end()).size(), 57u);
  }
}

TEST(Synth, TenFilesWithinBounds) {
  TempDir dir;
  SynthConfig config;
  config.seed = 1;
  config.count = 10;
  config.vocab = default_vocab();
  const Manifest m = synth_corpus(config, dir.path());
  ASSERT_EQ(m.size(), 10u);
  for (const auto& u : m.entries) {
    EXPECT_TRUE(fs::exists(u.path));
    EXPECT_GE(u.seconds(), config.min_seconds - 1e-4);
    EXPECT_LE(u.seconds(), config.max_seconds + 1e-4);
    EXPECT_FALSE(u.transcript.empty());
  }
  const Manifest loaded = load_manifest(dir.path() / "manifest.tsv", "synth");
  EXPECT_EQ(loaded, m);
}

TEST(Synth, SameSeedBitIdentical) {
  TempDir dir;
  SynthConfig config;
  config.seed = 5;
  config.count = 4;
  config.vocab = default_vocab();
  synth_corpus(config, dir.path() / "a");
  synth_corpus(config, dir.path() / "b");
  for (int i = 0; i < 4; ++i) {
    const std::string name = "synth-00000" + std::to_string(i) + ".wav";
    std::ifstream fa(dir.path() / "a" / name, std::ios::binary);
    std::ifstream fb(dir.path() / "b" / name, std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), {});
    const std::string bb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_FALSE(ba.empty());
    EXPECT_EQ(ba, bb);
  }
}

TEST(Synth, EmptyVocabAndBadBoundsRejected) {
  SynthConfig config;
  EXPECT_THROW(plan_synth_corpus(config), std::invalid_argument);
  config.vocab = {"ab"};
  config.min_seconds = 0.5;
  EXPECT_THROW(plan_synth_corpus(config), std::invalid_argument);
}

TEST(Synth, TwoCharactersHaveDistinctSpectralPeaks) {
  SynthConfig config;
  config.noise_std = 0.05;
  config.duration_jitter = 0.0;
  const int64_t n = 16000;
  const auto audio = render_transcript("ab", n, 11, config);
  std::vector<double> candidates;
  for (char c = 'a'; c <= 'z'; ++c) candidates.push_back(char_frequency(c));
  auto peak = [&](std::span<const float> half) {
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i) {
      if (dft_magnitude(half, candidates[i]) > dft_magnitude(half, candidates[best])) best = i;
    }
    return candidates[best];
  };
  const std::span<const float> all(audio);
  EXPECT_DOUBLE_EQ(peak(all.subspan(0, n / 2)), char_frequency('a'));
  EXPECT_DOUBLE_EQ(peak(all.subspan(n / 2)), char_frequency('b'));
  EXPECT_NE(char_frequency('a'), char_frequency('b'));
}

TEST(Synth, JitteredBoundariesStayWithinTheirRatio) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t chars = rng.uniform_int(1, 30);
    const int64_t samples = rng.uniform_int(16000, 160000);
    const auto b = char_boundaries(chars, samples, 0.5, rng);
    ASSERT_EQ(static_cast<int64_t>(b.size()), chars + 1);
    EXPECT_EQ(b.front(), 0);
    EXPECT_EQ(b.back(), samples);
    const double mean = static_cast<double>(samples) / static_cast<double>(chars);
    for (int64_t c = 0; c < chars; ++c) {
      const auto len = static_cast<double>(b[c + 1] - b[c]);
      // Ratio of two draws in [0.5, 1.5] is at most 3, plus rounding.
      EXPECT_GE(len, mean / 3.0 - 1.0);
      EXPECT_LE(len, mean * 3.0 + 1.0);
    }
  }
  EXPECT_THROW(char_boundaries(3, 100, 1.0, rng), std::invalid_argument);
  Rng fixed(1);
  EXPECT_EQ(char_boundaries(4, 100, 0.0, fixed), (std::vector<int64_t>{0, 25, 50, 75, 100}));
}

TEST(Synth, DurationsUniformKolmogorovSmirnov) {
  SynthConfig config;
  config.seed = 17;
  config.count = 1000;
  config.min_seconds = 1.0;
  config.max_seconds = 4.0;
  config.vocab = default_vocab();
  const auto plan = plan_synth_corpus(config);
  std::vector<double> u;
  for (const auto& e : plan) {
    u.push_back((static_cast<double>(e.num_samples) / kSampleRate - config.min_seconds) /
                (config.max_seconds - config.min_seconds));
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  const double n = static_cast<double>(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
  }
  // Asymptotic KS critical value at alpha = 0.01.
  EXPECT_LT(d, 1.628 / std::sqrt(n));
}
