#pragma once

#include <cstdint>
#include <functional>

#include "pano/geometry.hpp"
#include "pano/raster.hpp"

namespace pano {

// Writes `channels` values for a unit direction.
using SphereFunction = std::function<void(const Direction3&, double*)>;

Cubemap render_cubemap(const SphereFunction& fn, int face_size, int channels);
ErpImage render_erp(const SphereFunction& fn, int width, int height, int channels);

// 0.5 + 0.5 sin(3 lon) cos(2 lat), replicated over channels.
SphereFunction analytic_test_function(int channels);

// Real spherical-harmonic basis of degrees 1 and 2 (8 functions, each
// bounded by 1 in magnitude on the unit sphere).
inline constexpr int kSmoothBasisSize = 8;
double smooth_basis(int k, const Direction3& d);

// Low-frequency mixture 0.5 + sum_k a_k Y_k with one dominant component.
struct SmoothSceneSpec {
  int dominant = 0;
  std::array<std::array<double, 3>, kSmoothBasisSize> coeffs{};
};

// Amplitude, sign, tint and the weak components are drawn from the stream.
SmoothSceneSpec random_smooth_scene(std::uint64_t seed, int stream, int dominant);
SphereFunction smooth_scene_function(const SmoothSceneSpec& spec, int channels);

}  // namespace pano
