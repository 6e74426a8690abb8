#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "objreason/numerics/tensor.hpp"

namespace objreason {

inline constexpr char kCheckpointMagic[8] = {'O', 'B', 'J', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// File layout: magic, u32 version, u64-length config echo, i64 step,
/// u32 tensor count, then per tensor a u32-length name, u32 rank, u64
/// extents and float32 values. All integers and floats little-endian.
struct Checkpoint {
  std::string config_text;
  std::int64_t step = 0;
  std::map<std::string, Matrix<float>> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace objreason
