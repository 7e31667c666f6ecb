#pragma once

#include <cstdint>
#include <random>

namespace pano {

// Named sub-streams so independent draws never share a generator.
enum class Stream : std::uint64_t {
  Switch = 1,
  Noise = 2,
  Timestep = 3,
  SceneIndex = 4,
  SampleNoise = 5,
  Scene = 1000,  // scene i uses Scene + i
};

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x70616e6fu};
  return std::mt19937_64(seq);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  return make_stream(seed, static_cast<std::uint64_t>(s));
}

}  // namespace pano
