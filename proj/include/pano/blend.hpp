#pragma once

#include <optional>

#include "pano/geometry.hpp"
#include "pano/raster.hpp"

namespace pano {

struct BlendConfig {
  int iterations = 200;
  // Stop early once the interior max-abs residual drops to this value.
  std::optional<double> residual_stop;

  void validate() const;
};

// One channel of one face. Only the outermost ring of `boundary` is read.
struct PoissonProblem {
  Plane divergence;
  Plane boundary;
};

// 5-point Laplacian at interior pixels, zero on the border ring.
Plane laplacian5(const Plane& face);

// Dirichlet frame for `face`: each side is the average of the face's own
// edge pixels and the aligned edge pixels of its neighbour. Corners average
// the two sides meeting there. Interior pixels are zero.
Image dirichlet_boundary(const Cubemap& cube, FaceId face);

// One in-place row-major Gauss-Seidel sweep over the interior of f.
void gauss_seidel_sweep(Plane& f, const Plane& divergence);

// Max-abs of (5-point Laplacian of f) - divergence over the interior.
double poisson_residual(const Plane& f, const Plane& divergence);

Plane gauss_seidel_solve(const PoissonProblem& problem, const Plane& initial, const BlendConfig& cfg);

// Exact solution of the discrete Dirichlet problem by dense LU. face_size <= 32.
Plane dense_poisson_oracle(const PoissonProblem& problem);

// Faces are solved independently against boundaries built from the input,
// so the result does not depend on face order or thread schedule.
Cubemap cross_face_blend(const Cubemap& cube, const BlendConfig& cfg = {});

}  // namespace pano
