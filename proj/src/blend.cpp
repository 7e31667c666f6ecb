#include "pano/blend.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "detail.hpp"

namespace pano {

void BlendConfig::validate() const {
  if (iterations < 1) throw ConfigError("blend iterations must be >= 1, got " + std::to_string(iterations));
  if (residual_stop && !(*residual_stop >= 0.0)) throw ConfigError("residual stop threshold must be >= 0");
}

Plane laplacian5(const Plane& g) {
  const int w = g.width();
  const int h = g.height();
  if (w < 3 || h < 3) throw DomainError("laplacian5: face must be at least 3x3");
  Plane out(w, h);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x)
      out(x, y) = g(x + 1, y) + g(x - 1, y) + g(x, y + 1) + g(x, y - 1) - 4.0 * g(x, y);
  return out;
}

namespace {

struct SideRef {
  const EdgeSpec* edge;
  bool is_left;
};

SideRef find_side(FaceId face, Side side) {
  for (const EdgeSpec& e : edge_table()) {
    if (e.left_face == face && e.left_side == side) return {&e, true};
    if (e.right_face == face && e.right_side == side) return {&e, false};
  }
  throw DomainError("edge table has no entry for a face side");
}

}  // namespace

Image dirichlet_boundary(const Cubemap& cube, FaceId face) {
  cube.validate();
  const int n = cube.face_size();
  const int ch = cube.channels();
  const Image& own = cube.face(face);
  Image frame(n, n, ch);
  Image hits(n, n, 1);

  for (Side side : {Side::N, Side::S, Side::E, Side::W}) {
    const SideRef ref = find_side(face, side);
    const FaceId other = ref.is_left ? ref.edge->right_face : ref.edge->left_face;
    const Side other_side = ref.is_left ? ref.edge->right_side : ref.edge->left_side;
    const Image& nbr = cube.face(other);
    for (int pos = 0; pos < n; ++pos) {
      const int other_pos = ref.edge->reversed ? n - 1 - pos : pos;
      const PixelIndex p = side_pixel(side, pos, 0, n);
      const PixelIndex q = side_pixel(other_side, other_pos, 0, n);
      for (int c = 0; c < ch; ++c) frame.at(p.u, p.v, c) += 0.5 * (own.at(p.u, p.v, c) + nbr.at(q.u, q.v, c));
      hits.at(p.u, p.v, 0) += 1.0;
    }
  }
  // Corner pixels collected two side values.
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (hits.at(x, y, 0) > 1.0)
        for (int c = 0; c < ch; ++c) frame.at(x, y, c) /= hits.at(x, y, 0);
  return frame;
}

void gauss_seidel_sweep(Plane& f, const Plane& div) {
  const int w = f.width();
  const int h = f.height();
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x)
      f(x, y) = 0.25 * (f(x + 1, y) + f(x - 1, y) + f(x, y + 1) + f(x, y - 1) - div(x, y));
}

double poisson_residual(const Plane& f, const Plane& div) {
  const int w = f.width();
  const int h = f.height();
  double r = 0.0;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const double lap = f(x + 1, y) + f(x - 1, y) + f(x, y + 1) + f(x, y - 1) - 4.0 * f(x, y);
      r = std::max(r, std::abs(lap - div(x, y)));
    }
  return r;
}

namespace {

void require_problem_shape(const PoissonProblem& p, const Plane& g) {
  const int w = p.divergence.width();
  const int h = p.divergence.height();
  if (w < 3 || h < 3) throw DomainError("Poisson problem must be at least 3x3");
  if (p.boundary.width() != w || p.boundary.height() != h || g.width() != w || g.height() != h)
    throw DomainError("Poisson problem shape mismatch");
}

}  // namespace

Plane gauss_seidel_solve(const PoissonProblem& problem, const Plane& initial, const BlendConfig& cfg) {
  cfg.validate();
  require_problem_shape(problem, initial);
  const int w = initial.width();
  const int h = initial.height();
  Plane f = initial;
  for (int x = 0; x < w; ++x) {
    f(x, 0) = problem.boundary(x, 0);
    f(x, h - 1) = problem.boundary(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    f(0, y) = problem.boundary(0, y);
    f(w - 1, y) = problem.boundary(w - 1, y);
  }
  for (int it = 0; it < cfg.iterations; ++it) {
    gauss_seidel_sweep(f, problem.divergence);
    if (cfg.residual_stop && poisson_residual(f, problem.divergence) <= *cfg.residual_stop) break;
  }
  return f;
}

Plane dense_poisson_oracle(const PoissonProblem& problem) {
  const int w = problem.divergence.width();
  const int h = problem.divergence.height();
  if (w > 32 || h > 32) throw DomainError("dense_poisson_oracle: face larger than 32x32");
  require_problem_shape(problem, problem.boundary);

  const int iw = w - 2;
  const int ih = h - 2;
  const int n = iw * ih;
  auto idx = [iw](int x, int y) { return (y - 1) * iw + (x - 1); };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const int row = idx(x, y);
      a(row, row) = -4.0;
      double b = problem.divergence(x, y);
      const int nx[4] = {x + 1, x - 1, x, x};
      const int ny[4] = {y, y, y + 1, y - 1};
      for (int k = 0; k < 4; ++k) {
        const bool interior = nx[k] > 0 && nx[k] < w - 1 && ny[k] > 0 && ny[k] < h - 1;
        if (interior)
          a(row, idx(nx[k], ny[k])) = 1.0;
        else
          b -= problem.boundary(nx[k], ny[k]);
      }
      rhs(row) = b;
    }
  const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);

  Plane f = problem.boundary;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) f(x, y) = sol(idx(x, y));
  return f;
}

namespace detail {

Image blend_face(const Cubemap& cube, FaceId face, const BlendConfig& cfg) {
  const Image& g = cube.face(face);
  const Image frame = dirichlet_boundary(cube, face);
  Image out(g.width(), g.height(), g.channels());
  for (int c = 0; c < g.channels(); ++c) {
    const Plane gc = g.channel(c);
    const PoissonProblem problem{laplacian5(gc), frame.channel(c)};
    out.set_channel(c, gauss_seidel_solve(problem, gc, cfg));
  }
  return out;
}

}  // namespace detail

Cubemap cross_face_blend(const Cubemap& cube, const BlendConfig& cfg) {
  cfg.validate();
  cube.validate();
  if (cube.face_size() < 3) throw DomainError("cross_face_blend: face_size must be >= 3");
  Cubemap out(cube.face_size(), cube.channels());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < kNumFaces; ++i) out.face(i) = detail::blend_face(cube, face_from_index(i), cfg);
  return out;
}

}  // namespace pano
