#pragma once

#include <array>

#include "pano/geometry.hpp"
#include "pano/raster.hpp"

namespace pano {

enum class ValueScale { Unit, Byte };

struct SeamParams {
  double band_frac = 0.01;
  ValueScale value_scale = ValueScale::Byte;
  // Defaults are (0.01 L)^2 and (0.03 L)^2 for a value range L = 1.
  double ssim_c1 = 0.01 * 0.01;
  double ssim_c2 = 0.03 * 0.03;

  void validate() const;
  double scale_factor() const { return value_scale == ValueScale::Byte ? 255.0 : 1.0; }
  // max(1, round(band_frac * face_size))
  int band_width(int face_size) const;
};

struct SeamReport {
  std::array<double, kNumEdges> per_edge_ssim{};
  std::array<double, kNumEdges> per_edge_sobel{};
  double seam_ssim = 0.0;
  double seam_sobel = 0.0;
  SeamParams params;
};

// Mean local SSIM with a uniform odd square window of side min(width, 7),
// valid positions only, averaged over channels.
double ssim_band(const Image& a, const Image& b, const SeamParams& params);

// 3x3 x-Sobel [[-1,0,1],[-2,0,2],[-1,0,1]], replicate padding, per channel.
Image sobel_x(const Image& face);

// Per-edge Sobel score. The left face is laid out with the edge on its east
// side and the right face continues across the seam; x-Sobel on this joined
// strip is read at the two columns touching the seam.
double edge_sobel(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params);

double edge_ssim(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params);

SeamReport seam_ssim(const Cubemap& cube, const SeamParams& params = {});
SeamReport seam_sobel(const Cubemap& cube, const SeamParams& params = {});

// Both metrics, edges evaluated in parallel.
SeamReport seam_report(const Cubemap& cube, const SeamParams& params = {});

}  // namespace pano
