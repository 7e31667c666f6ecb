#pragma once

#include <cstdint>
#include <filesystem>

#include "pano/network.hpp"

namespace pano {

// Layout (little-endian):
//   "PANOCKPT"  u32 version  u32 config_len  config text (model keys)
//   u32 tensor_count, then per tensor:
//   u32 name_len  name  u32 dtype (0 = f32)  u32 ndim  u64 dims[ndim]  f32 payload
inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'N', 'O', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const JointFaceNetwork& net, const std::filesystem::path& path);
JointFaceNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace pano
