#pragma once

// Single-threaded reference versions of the OpenMP entry points. They share
// the per-row and per-face kernels, so results must match bitwise.

#include "pano/blend.hpp"
#include "pano/geometry.hpp"
#include "pano/seams.hpp"

namespace pano::serial {

Cubemap erp_to_cubemap(const ErpImage& erp, int face_size);
ErpImage cubemap_to_erp(const Cubemap& cube, int width, int height);
Cubemap cross_face_blend(const Cubemap& cube, const BlendConfig& cfg = {});
SeamReport seam_report(const Cubemap& cube, const SeamParams& params = {});

}  // namespace pano::serial
