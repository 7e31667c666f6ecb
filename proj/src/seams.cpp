#include "pano/seams.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"

namespace pano {

void SeamParams::validate() const {
  if (!(band_frac > 0.0 && band_frac <= 0.5)) throw ConfigError("band_frac must lie in (0, 0.5]");
  if (!(ssim_c1 >= 0.0) || !(ssim_c2 >= 0.0)) throw ConfigError("SSIM constants must be >= 0");
}

int SeamParams::band_width(int face_size) const {
  return std::max(1, static_cast<int>(std::lround(band_frac * face_size)));
}

double ssim_band(const Image& a, const Image& b, const SeamParams& params) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels())
    throw DomainError("ssim_band: band shape mismatch");
  const int w = a.width();
  const int h = a.height();
  if (w < 1 || h < 1) throw DomainError("ssim_band: empty band");
  int win = std::min(w, 7);
  if (win % 2 == 0) --win;
  if (win > h) throw DomainError("ssim_band: band shorter than the SSIM window");
  const double c1 = params.ssim_c1;
  const double c2 = params.ssim_c2;
  const double inv = 1.0 / (win * win);

  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double acc = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + win <= h; ++y0)
      for (int x0 = 0; x0 + win <= w; ++x0) {
        double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int y = y0; y < y0 + win; ++y)
          for (int x = x0; x < x0 + win; ++x) {
            const double va = a.at(x, y, c);
            const double vb = b.at(x, y, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        const double ma = sa * inv;
        const double mb = sb * inv;
        const double var_a = saa * inv - ma * ma;
        const double var_b = sbb * inv - mb * mb;
        const double cov = sab * inv - ma * mb;
        const double num = (2.0 * (ma * mb) + c1) * (2.0 * cov + c2);
        const double den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        acc += den == 0.0 ? 1.0 : num / den;
        ++count;
      }
    total += acc / count;
  }
  return total / a.channels();
}

Image sobel_x(const Image& f) {
  const int w = f.width();
  const int h = f.height();
  if (w < 1 || h < 1) throw DomainError("sobel_x: empty image");
  Image out(w, h, f.channels());
  auto px = [&](int x, int y, int c) {
    return f.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1), c);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < f.channels(); ++c)
        out.at(x, y, c) = (px(x + 1, y - 1, c) - px(x - 1, y - 1, c)) +
                          2.0 * (px(x + 1, y, c) - px(x - 1, y, c)) +
                          (px(x + 1, y + 1, c) - px(x - 1, y + 1, c));
  return out;
}

double edge_sobel(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params) {
  const int n = cube.face_size();
  if (n < 4) throw DomainError("seam_sobel: face_size must be >= 4");
  const Image lb = extract_edge_band(cube, edge, 2, BandSide::Left);
  const Image rb = extract_edge_band(cube, edge, 2, BandSide::Right);
  // Columns: left depth 1, left depth 0 | right depth 0, right depth 1.
  Image strip(4, n, cube.channels());
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < cube.channels(); ++c) {
      strip.at(0, k, c) = lb.at(1, k, c);
      strip.at(1, k, c) = lb.at(0, k, c);
      strip.at(2, k, c) = rb.at(0, k, c);
      strip.at(3, k, c) = rb.at(1, k, c);
    }
  const Image g = sobel_x(strip);
  double left = 0.0;
  double right = 0.0;
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < cube.channels(); ++c) {
      left += std::abs(g.at(1, k, c));
      right += std::abs(g.at(2, k, c));
    }
  const double count = static_cast<double>(n) * cube.channels();
  return 0.5 * (left / count + right / count) * params.scale_factor();
}

double edge_ssim(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params) {
  const int width = params.band_width(cube.face_size());
  if (width > cube.face_size() / 2)
    throw DomainError("seam_ssim: band width " + std::to_string(width) + " exceeds face_size/2");
  return ssim_band(extract_edge_band(cube, edge, width, BandSide::Left),
                   extract_edge_band(cube, edge, width, BandSide::Right), params);
}

namespace detail {

EdgeScore score_edge(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params) {
  return {edge_ssim(cube, edge, params), edge_sobel(cube, edge, params)};
}

}  // namespace detail

namespace {

double mean12(const std::array<double, kNumEdges>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / kNumEdges;
}

}  // namespace

SeamReport seam_ssim(const Cubemap& cube, const SeamParams& params) {
  params.validate();
  cube.validate();
  SeamReport r;
  r.params = params;
  const auto& edges = edge_table();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < kNumEdges; ++e)
    r.per_edge_ssim[static_cast<std::size_t>(e)] = edge_ssim(cube, edges[static_cast<std::size_t>(e)], params);
  r.seam_ssim = mean12(r.per_edge_ssim);
  return r;
}

SeamReport seam_sobel(const Cubemap& cube, const SeamParams& params) {
  params.validate();
  cube.validate();
  SeamReport r;
  r.params = params;
  const auto& edges = edge_table();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < kNumEdges; ++e)
    r.per_edge_sobel[static_cast<std::size_t>(e)] = edge_sobel(cube, edges[static_cast<std::size_t>(e)], params);
  r.seam_sobel = mean12(r.per_edge_sobel);
  return r;
}

SeamReport seam_report(const Cubemap& cube, const SeamParams& params) {
  params.validate();
  cube.validate();
  SeamReport r;
  r.params = params;
  const auto& edges = edge_table();
#pragma omp parallel for schedule(static)
  for (int e = 0; e < kNumEdges; ++e) {
    const auto s = detail::score_edge(cube, edges[static_cast<std::size_t>(e)], params);
    r.per_edge_ssim[static_cast<std::size_t>(e)] = s.ssim;
    r.per_edge_sobel[static_cast<std::size_t>(e)] = s.sobel;
  }
  r.seam_ssim = mean12(r.per_edge_ssim);
  r.seam_sobel = mean12(r.per_edge_sobel);
  return r;
}

}  // namespace pano
