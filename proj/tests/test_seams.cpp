#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pano/seams.hpp"
#include "pano/synth.hpp"

using namespace pano;

namespace {

Image uniform_band(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, 1);
  for (double& v : img.data()) v = u(rng);
  return img;
}

// A sphere function without cube symmetry, and the same function rotated
// 90 degrees about +y. Rendering both permutes the faces exactly.
void asymmetric(const Direction3& d, double* out) {
  out[0] = 0.5 + 0.2 * std::sin(5.0 * d.x + 3.0 * d.y) + 0.1 * std::cos(7.0 * d.z * d.x + d.y);
}

void asymmetric_rotated(const Direction3& d, double* out) { asymmetric({d.z, d.y, -d.x}, out); }

}  // namespace

TEST_CASE("ssim_band examples") {
  std::mt19937_64 rng(11);
  const Image a = uniform_band(5, 64, rng);
  const SeamParams p;
  CHECK(ssim_band(a, a, p) == 1.0);
  CHECK(ssim_band(Image(5, 32, 1, 0.3), Image(5, 32, 1, 0.3), p) == 1.0);
  CHECK_THROWS_AS(ssim_band(Image(5, 32, 1), Image(4, 32, 1), p), DomainError);

  double worst = -1.0;
  for (int seed = 0; seed < 10; ++seed) {
    const Image x = uniform_band(5, 512, rng);
    const Image y = uniform_band(5, 512, rng);
    worst = std::max(worst, ssim_band(x, y, p));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("ssim is invariant to scaling values with matching constants") {
  std::mt19937_64 rng(12);
  const Image a = uniform_band(5, 64, rng);
  Image b = a;
  for (double& v : b.data()) v = 0.7 * v + 0.1 * std::sin(17.0 * v);
  SeamParams p;
  const double base = ssim_band(a, b, p);
  Image a2 = a, b2 = b;
  for (double& v : a2.data()) v *= 255.0;
  for (double& v : b2.data()) v *= 255.0;
  p.ssim_c1 *= 255.0 * 255.0;
  p.ssim_c2 *= 255.0 * 255.0;
  CHECK(ssim_band(a2, b2, p) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("sobel_x examples") {
  Image ramp_u(5, 5, 1), ramp_v(5, 5, 1);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      ramp_u.at(x, y, 0) = x;
      ramp_v.at(x, y, 0) = y;
    }
  const Image gu = sobel_x(ramp_u), gv = sobel_x(ramp_v), gc = sobel_x(Image(5, 5, 1, 0.4));
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      if (x > 0 && x < 4) CHECK(gu.at(x, y, 0) == 8.0);
      CHECK(gv.at(x, y, 0) == 0.0);
      CHECK(gc.at(x, y, 0) == 0.0);
    }
  // Replicate padding halves the ramp response on the border columns.
  CHECK(gu.at(0, 2, 0) == 4.0);
}

TEST_CASE("constant cubemap scores perfectly") {
  const SeamReport r = seam_report(Cubemap(32, 3, 0.6));
  CHECK(r.seam_ssim == 1.0);
  CHECK(r.seam_sobel == 0.0);
}

TEST_CASE("report is the mean of its per-edge values") {
  const SeamReport r = seam_report(testing::noise_cubemap(32, 1, 3));
  double s = 0.0, b = 0.0;
  for (int e = 0; e < kNumEdges; ++e) {
    s += r.per_edge_ssim[static_cast<std::size_t>(e)];
    b += r.per_edge_sobel[static_cast<std::size_t>(e)];
    CHECK(r.per_edge_ssim[static_cast<std::size_t>(e)] >= -1.0);
    CHECK(r.per_edge_ssim[static_cast<std::size_t>(e)] <= 1.0);
    CHECK(r.per_edge_sobel[static_cast<std::size_t>(e)] >= 0.0);
  }
  CHECK(r.seam_ssim == doctest::Approx(s / 12));
  CHECK(r.seam_sobel == doctest::Approx(b / 12));
  const SeamReport split_s = seam_ssim(testing::noise_cubemap(32, 1, 3));
  const SeamReport split_b = seam_sobel(testing::noise_cubemap(32, 1, 3));
  CHECK(split_s.seam_ssim == r.seam_ssim);
  CHECK(split_b.seam_sobel == r.seam_sobel);
}

TEST_CASE("noise and smooth cubemaps are ordered as expected") {
  const SeamReport noise = seam_report(testing::noise_cubemap(512, 3, 21));
  const SeamReport smooth = seam_report(testing::smooth_cubemap(512, 3));
  CHECK(noise.seam_ssim < 0.05);
  CHECK(noise.seam_sobel > 100.0);
  CHECK(smooth.seam_ssim > 0.8);
  CHECK(smooth.seam_sobel < 15.0);
}

TEST_CASE("metrics are invariant under a face-permuting rotation") {
  const Cubemap a = render_cubemap(asymmetric, 64, 1);
  const Cubemap b = render_cubemap(asymmetric_rotated, 64, 1);
  const SeamReport ra = seam_report(a), rb = seam_report(b);
  CHECK(std::abs(ra.seam_ssim - rb.seam_ssim) < 1e-9);
  CHECK(std::abs(ra.seam_sobel - rb.seam_sobel) < 1e-9);
  // The rotation really moved content between faces.
  CHECK(max_abs_diff(a.face(FaceId::Front), b.face(FaceId::Front)) > 0.01);
}

TEST_CASE("sobel grows monotonically with a face offset") {
  double prev = -1.0;
  for (double delta : {0.0, 0.01, 0.02, 0.05, 0.1, 0.3}) {
    for (double sign : {1.0, -1.0}) {
      Cubemap c(16, 1, 0.5);
      for (double& v : c.face(FaceId::Left).data()) v += sign * delta;
      const double s = seam_sobel(c).seam_sobel;
      CHECK(s >= prev);
      if (sign < 0) prev = s;
    }
  }
}

TEST_CASE("byte scale is 255 times unit scale") {
  const Cubemap c = testing::noise_cubemap(32, 3, 5);
  SeamParams unit;
  unit.value_scale = ValueScale::Unit;
  const double u = seam_sobel(c, unit).seam_sobel;
  const double b = seam_sobel(c).seam_sobel;
  CHECK(b == doctest::Approx(255.0 * u).epsilon(1e-12));
}

TEST_CASE("band width and parameter validation") {
  SeamParams p;
  CHECK(p.band_width(512) == 5);
  CHECK(p.band_width(64) == 1);
  p.band_frac = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.band_frac = 0.6;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
