#include "pano/geometry.hpp"
#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pano {

FaceId face_from_index(int index) {
  if (index < 0 || index >= kNumFaces) throw DomainError("face index out of range: " + std::to_string(index));
  return static_cast<FaceId>(index);
}

std::string_view face_name(FaceId f) {
  switch (f) {
    case FaceId::Front: return "front";
    case FaceId::Right: return "right";
    case FaceId::Back: return "back";
    case FaceId::Left: return "left";
    case FaceId::Up: return "up";
    case FaceId::Down: return "down";
  }
  return "?";
}

std::string_view side_name(Side s) {
  switch (s) {
    case Side::N: return "N";
    case Side::S: return "S";
    case Side::E: return "E";
    case Side::W: return "W";
  }
  return "?";
}

double Direction3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Direction3 Direction3::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite direction");
  return {x / n, y / n, z / n};
}

Cubemap::Cubemap(int face_size, int channels, double fill) : face_size_(face_size), channels_(channels) {
  if (face_size < 1) throw DomainError("Cubemap: face_size must be >= 1");
  for (auto& f : faces_) f = Image(face_size, face_size, channels, fill);
}

void Cubemap::validate() const {
  for (int i = 0; i < kNumFaces; ++i) {
    const Image& f = faces_[static_cast<std::size_t>(i)];
    if (f.width() != face_size_ || f.height() != face_size_ || f.channels() != channels_)
      throw DomainError("Cubemap: face '" + std::string(face_name(face_from_index(i))) + "' has inconsistent shape");
  }
}

Direction3 dir_from_face_coords(FaceId face, double a, double b) {
  Direction3 d;
  switch (face) {
    case FaceId::Front: d = {a, -b, 1.0}; break;
    case FaceId::Right: d = {1.0, -b, -a}; break;
    case FaceId::Back: d = {-a, -b, -1.0}; break;
    case FaceId::Left: d = {-1.0, -b, a}; break;
    case FaceId::Up: d = {a, 1.0, b}; break;
    case FaceId::Down: d = {a, -1.0, -b}; break;
  }
  return d.normalized();
}

Direction3 dir_from_face_pixel(FaceId face, int u, int v, int face_size) {
  if (face_size < 1) throw DomainError("dir_from_face_pixel: face_size must be >= 1");
  if (u < 0 || v < 0 || u >= face_size || v >= face_size)
    throw DomainError("dir_from_face_pixel: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                      ") outside face of size " + std::to_string(face_size));
  const double s = static_cast<double>(face_size);
  const double a = 2.0 * (u + 0.5) / s - 1.0;
  const double b = 2.0 * (v + 0.5) / s - 1.0;
  return dir_from_face_coords(face, a, b);
}

FacePoint face_pixel_from_dir(const Direction3& d, int face_size) {
  if (!std::isfinite(d.x) || !std::isfinite(d.y) || !std::isfinite(d.z))
    throw DomainError("face_pixel_from_dir: non-finite direction");
  if (d.x == 0.0 && d.y == 0.0 && d.z == 0.0) throw DomainError("face_pixel_from_dir: zero direction");

  // Projection onto each face normal, in tie-break priority order.
  const std::array<double, kNumFaces> proj = {d.z, d.x, -d.z, -d.x, d.y, -d.y};
  int best = 0;
  for (int i = 1; i < kNumFaces; ++i)
    if (proj[static_cast<std::size_t>(i)] > proj[static_cast<std::size_t>(best)]) best = i;

  const double s = proj[static_cast<std::size_t>(best)];
  double a = 0.0;
  double b = 0.0;
  switch (static_cast<FaceId>(best)) {
    case FaceId::Front: a = d.x / s; b = -d.y / s; break;
    case FaceId::Right: a = -d.z / s; b = -d.y / s; break;
    case FaceId::Back: a = -d.x / s; b = -d.y / s; break;
    case FaceId::Left: a = d.z / s; b = -d.y / s; break;
    case FaceId::Up: a = d.x / s; b = d.z / s; break;
    case FaceId::Down: a = d.x / s; b = -d.z / s; break;
  }
  const double half = 0.5 * static_cast<double>(face_size);
  return {static_cast<FaceId>(best), (a + 1.0) * half, (b + 1.0) * half};
}

LonLat lonlat_from_dir(const Direction3& d) {
  const Direction3 n = d.normalized();
  double lon = std::atan2(n.x, n.z);
  if (lon >= std::numbers::pi) lon -= 2.0 * std::numbers::pi;
  const double lat = std::asin(std::clamp(n.y, -1.0, 1.0));
  return {lon, lat};
}

Direction3 dir_from_lonlat(double lon, double lat) {
  const double c = std::cos(lat);
  return {c * std::sin(lon), std::sin(lat), c * std::cos(lon)};
}

Direction3 dir_from_erp_pixel(int i, int j, int width, int height) {
  const double lon = ((i + 0.5) / width - 0.5) * 2.0 * std::numbers::pi;
  const double lat = (0.5 - (j + 0.5) / height) * std::numbers::pi;
  return dir_from_lonlat(lon, lat);
}

const std::array<EdgeSpec, kNumEdges>& edge_table() {
  using F = FaceId;
  using S = Side;
  static const std::array<EdgeSpec, kNumEdges> table = {{
      {0, F::Front, S::N, F::Up, S::S, false},
      {1, F::Front, S::E, F::Right, S::W, false},
      {2, F::Front, S::S, F::Down, S::N, false},
      {3, F::Front, S::W, F::Left, S::E, false},
      {4, F::Right, S::E, F::Back, S::W, false},
      {5, F::Right, S::N, F::Up, S::E, true},
      {6, F::Right, S::S, F::Down, S::E, false},
      {7, F::Back, S::E, F::Left, S::W, false},
      {8, F::Back, S::N, F::Up, S::N, true},
      {9, F::Back, S::S, F::Down, S::S, true},
      {10, F::Left, S::N, F::Up, S::W, false},
      {11, F::Left, S::S, F::Down, S::W, true},
  }};
  return table;
}

PixelIndex side_pixel(Side side, int pos, int depth, int face_size) {
  switch (side) {
    case Side::N: return {pos, depth};
    case Side::S: return {pos, face_size - 1 - depth};
    case Side::W: return {depth, pos};
    case Side::E: return {face_size - 1 - depth, pos};
  }
  return {0, 0};
}

Image extract_edge_band(const Cubemap& cube, const EdgeSpec& edge, int width_px, BandSide side) {
  const int n = cube.face_size();
  if (width_px < 1 || width_px > n / 2)
    throw DomainError("extract_edge_band: width " + std::to_string(width_px) + " outside [1, face_size/2]");
  const bool is_left = side == BandSide::Left;
  const Image& face = cube.face(is_left ? edge.left_face : edge.right_face);
  const Side s = is_left ? edge.left_side : edge.right_side;
  const bool flip = !is_left && edge.reversed;
  const int ch = cube.channels();

  Image band(width_px, n, ch);
  for (int k = 0; k < n; ++k) {
    const int pos = flip ? n - 1 - k : k;
    for (int j = 0; j < width_px; ++j) {
      const PixelIndex p = side_pixel(s, pos, j, n);
      for (int c = 0; c < ch; ++c) band.at(j, k, c) = face.at(p.u, p.v, c);
    }
  }
  return band;
}

void sample_erp(const Image& erp, double lon, double lat, double* out) {
  const int w = erp.width();
  const int h = erp.height();
  const double x = (lon / (2.0 * std::numbers::pi) + 0.5) * w - 0.5;
  const double y = std::clamp((0.5 - lat / std::numbers::pi) * h - 0.5, 0.0, static_cast<double>(h - 1));
  const double xf = std::floor(x);
  const double fx = x - xf;
  int x0 = static_cast<int>(xf) % w;
  if (x0 < 0) x0 += w;
  const int x1 = (x0 + 1) % w;
  const int y0 = static_cast<int>(std::floor(y));
  const int y1 = std::min(y0 + 1, h - 1);
  const double fy = y - y0;
  for (int c = 0; c < erp.channels(); ++c) {
    const double top = (1.0 - fx) * erp.at(x0, y0, c) + fx * erp.at(x1, y0, c);
    const double bot = (1.0 - fx) * erp.at(x0, y1, c) + fx * erp.at(x1, y1, c);
    out[c] = (1.0 - fy) * top + fy * bot;
  }
}

void sample_face(const Image& face, double u, double v, double* out) {
  const int n = face.width();
  const double x = std::clamp(u - 0.5, 0.0, static_cast<double>(n - 1));
  const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(n - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, n - 1);
  const int y1 = std::min(y0 + 1, n - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < face.channels(); ++c) {
    const double top = (1.0 - fx) * face.at(x0, y0, c) + fx * face.at(x1, y0, c);
    const double bot = (1.0 - fx) * face.at(x0, y1, c) + fx * face.at(x1, y1, c);
    out[c] = (1.0 - fy) * top + fy * bot;
  }
}

namespace detail {

void erp_to_face_row(const Image& erp, FaceId f, int v, Image& face) {
  const int n = face.width();
  for (int u = 0; u < n; ++u) {
    const LonLat ll = lonlat_from_dir(dir_from_face_pixel(f, u, v, n));
    sample_erp(erp, ll.lon, ll.lat, &face.at(u, v, 0));
  }
}

void cube_to_erp_row(const Cubemap& cube, int j, Image& erp) {
  const int w = erp.width();
  const int h = erp.height();
  for (int i = 0; i < w; ++i) {
    const FacePoint p = face_pixel_from_dir(dir_from_erp_pixel(i, j, w, h), cube.face_size());
    sample_face(cube.face(p.face), p.u, p.v, &erp.at(i, j, 0));
  }
}

}  // namespace detail

Cubemap erp_to_cubemap(const ErpImage& erp, int face_size) {
  if (face_size < 1) throw DomainError("erp_to_cubemap: face_size must be >= 1");
  if (erp.width() != 2 * erp.height() || erp.height() < 1) throw DomainError("erp_to_cubemap: invalid ERP image");
  Cubemap cube(face_size, erp.channels());
  const int rows = kNumFaces * face_size;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const FaceId f = static_cast<FaceId>(r / face_size);
    detail::erp_to_face_row(erp.image(), f, r % face_size, cube.face(f));
  }
  return cube;
}

ErpImage cubemap_to_erp(const Cubemap& cube, int width, int height) {
  if (height < 1 || width != 2 * height)
    throw DomainError("cubemap_to_erp: need width == 2 * height, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  cube.validate();
  Image out(width, height, cube.channels());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < height; ++j) detail::cube_to_erp_row(cube, j, out);
  return ErpImage(std::move(out));
}

}  // namespace pano
