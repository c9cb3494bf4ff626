// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "w2v/tensor.hpp"

namespace w2v {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Little-endian file: magic "W2VM", u32 version, u64-length config JSON,
/// u64-length state JSON, u32 tensor count, then per tensor a u32-length name,
/// u8 dtype (8 = f64), u32 rank, i64 dims and the raw values.
struct Checkpoint {
  nlohmann::json config;
  /// Step, config hash, optimizer step counts, assembler and ledger state.
  nlohmann::json state;
  /// Parameters under their own names; optimizer moments as
  /// "adam.m/<name>" and "adam.v/<name>".
  std::vector<NamedTensor> tensors;

  int64_t step() const { return state.at("step").get<int64_t>(); }
  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace w2v
