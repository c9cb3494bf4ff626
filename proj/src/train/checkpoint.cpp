// SPDX-License-Identifier: Apache-2.0
#include "w2v/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace w2v {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'W', '2', 'V', 'M'};
constexpr uint8_t kDtypeF64 = 8;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_bytes(std::string& out, const std::string& s) {
  put<uint64_t>(out, s.size());
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(uint64_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_raw(void* dst, size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(uint64_t n) const {
    if (n > bytes_.size() - pos_) throw CheckpointError(source_ + ": truncated checkpoint");
  }

  const std::string& bytes_;
  std::string source_;
  size_t pos_ = 0;
};

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw CheckpointError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, 4);
  put<uint32_t>(out, kCheckpointVersion);
  put_bytes(out, ckpt.config.dump());
  put_bytes(out, ckpt.state.dump());
  put<uint32_t>(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put<uint32_t>(out, static_cast<uint32_t>(t.name.size()));
    out += t.name;
    put<uint8_t>(out, kDtypeF64);
    put<uint32_t>(out, static_cast<uint32_t>(t.value.ndim()));
    for (int64_t d : t.value.shape()) put<int64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.value.data()), static_cast<size_t>(t.value.size()) * sizeof(double));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.get_string(4) != std::string(kMagic, 4)) throw CheckpointError(source + ": not a checkpoint (bad magic)");
  const auto version = in.get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  try {
    ckpt.config = nlohmann::json::parse(in.get_string(in.get<uint64_t>()));
    ckpt.state = nlohmann::json::parse(in.get_string(in.get<uint64_t>()));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(source + ": corrupt JSON header: " + e.what());
  }
  const auto count = in.get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = in.get_string(in.get<uint32_t>());
    if (in.get<uint8_t>() != kDtypeF64) throw CheckpointError(source + ": tensor " + t.name + " is not f64");
    const auto rank = in.get<uint32_t>();
    if (rank > 8) throw CheckpointError(source + ": tensor " + t.name + " has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = in.get<int64_t>();
      if (d < 0) throw CheckpointError(source + ": tensor " + t.name + " has a negative dimension");
    }
    t.value = Tensor(shape);
    in.get_raw(t.value.data(), static_cast<size_t>(t.value.size()) * sizeof(double));
    ckpt.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw CheckpointError(source + ": trailing bytes after the last tensor");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(path.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(path.string() + ": cannot open checkpoint");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path.string());
}

}  // namespace w2v
