// SPDX-License-Identifier: Apache-2.0
#include "w2v/data/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace w2v::data {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void put_u16(std::ofstream& out, uint16_t v) {
  const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b.data(), 2);
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 | static_cast<uint32_t>(p[2]) << 16 |
         static_cast<uint32_t>(p[3]) << 24;
}

uint16_t get_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | p[1] << 8); }

struct WavLayout {
  std::streamoff data_offset = 0;
  uint32_t data_bytes = 0;
};

WavLayout parse_header(std::ifstream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 12> riff{};
  in.read(reinterpret_cast<char*>(riff.data()), 12);
  if (!in || std::memcmp(riff.data(), "RIFF", 4) != 0 || std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path.string());
  }
  bool have_fmt = false;
  for (;;) {
    std::array<unsigned char, 8> chunk{};
    in.read(reinterpret_cast<char*>(chunk.data()), 8);
    if (!in) throw std::runtime_error("missing data chunk: " + path.string());
    const uint32_t size = get_u32(chunk.data() + 4);
    if (std::memcmp(chunk.data(), "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      in.read(reinterpret_cast<char*>(fmt.data()), size);
      if (!in || size < 16) throw std::runtime_error("truncated fmt chunk: " + path.string());
      const uint16_t format = get_u16(fmt.data());
      const uint16_t channels = get_u16(fmt.data() + 2);
      const uint32_t rate = get_u32(fmt.data() + 4);
      const uint16_t bits = get_u16(fmt.data() + 14);
      if (format != 1 || channels != 1 || rate != kSampleRate || bits != 16) {
        throw std::runtime_error("unsupported WAV format (need PCM16 mono 16 kHz): " + path.string());
      }
      have_fmt = true;
    } else if (std::memcmp(chunk.data(), "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("data chunk before fmt chunk: " + path.string());
      return {in.tellg(), size};
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
    if (size & 1 && std::memcmp(chunk.data(), "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const float> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  std::vector<char> pcm(samples.size() * 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    const float c = std::clamp(samples[i], -1.0f, 1.0f);
    const auto v = static_cast<int16_t>(std::clamp<long>(std::lround(c * 32768.0f), -32768, 32767));
    const auto u = static_cast<uint16_t>(v);
    pcm[2 * i] = static_cast<char>(u & 0xff);
    pcm[2 * i + 1] = static_cast<char>(u >> 8);
  }
  out.write(pcm.data(), static_cast<std::streamsize>(pcm.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<float> read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const WavLayout layout = parse_header(in, path);
  std::vector<unsigned char> raw(layout.data_bytes);
  in.read(reinterpret_cast<char*>(raw.data()), layout.data_bytes);
  if (!in) throw std::runtime_error("truncated audio data: " + path.string());
  std::vector<float> samples(layout.data_bytes / 2);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<int16_t>(get_u16(raw.data() + 2 * i));
    samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return samples;
}

int64_t wav_num_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_header(in, path).data_bytes / 2;
}

}  // namespace w2v::data
