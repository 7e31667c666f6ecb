#include "pano/synth.hpp"

#include <cmath>
#include <random>

#include "pano/rng.hpp"

namespace pano {

Cubemap render_cubemap(const SphereFunction& fn, int face_size, int channels) {
  Cubemap cube(face_size, channels);
  const int rows = kNumFaces * face_size;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const FaceId f = face_from_index(r / face_size);
    const int v = r % face_size;
    Image& face = cube.face(f);
    for (int u = 0; u < face_size; ++u) fn(dir_from_face_pixel(f, u, v, face_size), &face.at(u, v, 0));
  }
  return cube;
}

ErpImage render_erp(const SphereFunction& fn, int width, int height, int channels) {
  ErpImage erp(width, height, channels);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) fn(dir_from_erp_pixel(i, j, width, height), &erp.image().at(i, j, 0));
  return erp;
}

SphereFunction analytic_test_function(int channels) {
  return [channels](const Direction3& d, double* out) {
    const LonLat ll = lonlat_from_dir(d);
    const double v = 0.5 + 0.5 * std::sin(3.0 * ll.lon) * std::cos(2.0 * ll.lat);
    for (int c = 0; c < channels; ++c) out[c] = v;
  };
}

double smooth_basis(int k, const Direction3& d) {
  const double x = d.x, y = d.y, z = d.z;
  switch (k) {
    case 0: return x;
    case 1: return y;
    case 2: return z;
    case 3: return 2.0 * x * y;
    case 4: return 2.0 * y * z;
    case 5: return 2.0 * x * z;
    case 6: return x * x - y * y;
    case 7: return 0.5 * (3.0 * z * z - 1.0);
    default: throw DomainError("smooth_basis: index out of range");
  }
}

SmoothSceneSpec random_smooth_scene(std::uint64_t seed, int stream, int dominant) {
  if (dominant < 0 || dominant >= kSmoothBasisSize) throw DomainError("random_smooth_scene: dominant component must be in [0, 8)");
  auto rng = make_stream(seed, static_cast<std::uint64_t>(stream));
  std::uniform_real_distribution<double> strong(0.15, 0.25);
  std::uniform_real_distribution<double> weak(-0.025, 0.025);
  std::uniform_real_distribution<double> tint(0.6, 1.0);
  SmoothSceneSpec s;
  s.dominant = dominant;
  const double sign = (rng() & 1u) ? 1.0 : -1.0;
  const double amp = strong(rng);
  for (int k = 0; k < kSmoothBasisSize; ++k)
    for (int c = 0; c < 3; ++c) {
      auto& a = s.coeffs[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      a = k == s.dominant ? sign * amp * tint(rng) : weak(rng);
    }
  return s;
}

SphereFunction smooth_scene_function(const SmoothSceneSpec& spec, int channels) {
  if (channels < 1 || channels > 3) throw DomainError("smooth_scene_function: channels must be 1..3");
  return [spec, channels](const Direction3& d, double* out) {
    double basis[kSmoothBasisSize];
    for (int k = 0; k < kSmoothBasisSize; ++k) basis[k] = smooth_basis(k, d);
    for (int c = 0; c < channels; ++c) {
      double v = 0.5;
      for (int k = 0; k < kSmoothBasisSize; ++k) v += spec.coeffs[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] * basis[k];
      out[c] = v;
    }
  };
}

}  // namespace pano
