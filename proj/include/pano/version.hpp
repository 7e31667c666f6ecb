#pragma once

namespace pano {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kDatasetGenerator = "pano-toy-1";

}  // namespace pano
