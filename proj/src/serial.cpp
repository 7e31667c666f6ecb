#include "pano/serial.hpp"

#include "detail.hpp"

namespace pano::serial {

Cubemap erp_to_cubemap(const ErpImage& erp, int face_size) {
  if (face_size < 1) throw DomainError("erp_to_cubemap: face_size must be >= 1");
  Cubemap cube(face_size, erp.channels());
  for (FaceId f : kAllFaces)
    for (int v = 0; v < face_size; ++v) detail::erp_to_face_row(erp.image(), f, v, cube.face(f));
  return cube;
}

ErpImage cubemap_to_erp(const Cubemap& cube, int width, int height) {
  if (height < 1 || width != 2 * height) throw DomainError("cubemap_to_erp: need width == 2 * height");
  cube.validate();
  Image out(width, height, cube.channels());
  for (int j = 0; j < height; ++j) detail::cube_to_erp_row(cube, j, out);
  return ErpImage(std::move(out));
}

Cubemap cross_face_blend(const Cubemap& cube, const BlendConfig& cfg) {
  cfg.validate();
  cube.validate();
  if (cube.face_size() < 3) throw DomainError("cross_face_blend: face_size must be >= 3");
  Cubemap out(cube.face_size(), cube.channels());
  for (FaceId f : kAllFaces) out.face(f) = detail::blend_face(cube, f, cfg);
  return out;
}

SeamReport seam_report(const Cubemap& cube, const SeamParams& params) {
  params.validate();
  cube.validate();
  SeamReport r;
  r.params = params;
  double ssim = 0.0;
  double sobel = 0.0;
  for (const EdgeSpec& e : edge_table()) {
    const auto s = detail::score_edge(cube, e, params);
    r.per_edge_ssim[static_cast<std::size_t>(e.edge_index)] = s.ssim;
    r.per_edge_sobel[static_cast<std::size_t>(e.edge_index)] = s.sobel;
  }
  for (int e = 0; e < kNumEdges; ++e) {
    ssim += r.per_edge_ssim[static_cast<std::size_t>(e)];
    sobel += r.per_edge_sobel[static_cast<std::size_t>(e)];
  }
  r.seam_ssim = ssim / kNumEdges;
  r.seam_sobel = sobel / kNumEdges;
  return r;
}

}  // namespace pano::serial
