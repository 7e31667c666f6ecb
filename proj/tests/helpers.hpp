#pragma once

#include <cmath>
#include <random>

#include "pano/geometry.hpp"
#include "pano/synth.hpp"

namespace pano::testing {

inline Cubemap noise_cubemap(int face_size, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Cubemap c(face_size, channels);
  for (int i = 0; i < kNumFaces; ++i)
    for (double& v : c.face(i).data()) v = u(rng);
  return c;
}

inline Cubemap smooth_cubemap(int face_size, int channels = 1) {
  return render_cubemap(analytic_test_function(channels), face_size, channels);
}

inline double psnr(const Image& a, const Image& b, int row_begin, int row_end) {
  double se = 0.0;
  long n = 0;
  for (int y = row_begin; y < row_end; ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        se += d * d;
        ++n;
      }
  return 10.0 * std::log10(1.0 / (se / n));
}

}  // namespace pano::testing
