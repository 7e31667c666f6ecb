#pragma once

// Per-row / per-face kernels shared by the OpenMP entry points and the
// serial reference in serial.cpp.

#include "pano/blend.hpp"
#include "pano/geometry.hpp"
#include "pano/seams.hpp"

namespace pano::detail {

void erp_to_face_row(const Image& erp, FaceId f, int v, Image& face);
void cube_to_erp_row(const Cubemap& cube, int j, Image& erp);

Image blend_face(const Cubemap& cube, FaceId face, const BlendConfig& cfg);

struct EdgeScore {
  double ssim;
  double sobel;
};
EdgeScore score_edge(const Cubemap& cube, const EdgeSpec& edge, const SeamParams& params);

}  // namespace pano::detail
