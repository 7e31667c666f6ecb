#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "pano/raster.hpp"

namespace pano {

// Stable encoding; Front = 0 is the view-conditioned slot.
enum class FaceId : std::uint8_t { Front = 0, Right = 1, Back = 2, Left = 3, Up = 4, Down = 5 };

inline constexpr int kNumFaces = 6;
inline constexpr int kNumEdges = 12;
inline constexpr std::array<FaceId, kNumFaces> kAllFaces = {FaceId::Front, FaceId::Right, FaceId::Back,
                                                            FaceId::Left,  FaceId::Up,    FaceId::Down};

constexpr int face_index(FaceId f) { return static_cast<int>(f); }
FaceId face_from_index(int index);
std::string_view face_name(FaceId f);

// Face sides in face-local pixel space: N is row 0, S the last row,
// W column 0, E the last column.
enum class Side : std::uint8_t { N, S, E, W };

std::string_view side_name(Side s);

struct Direction3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Direction3 normalized() const;
};

struct FacePoint {
  FaceId face;
  double u;  // continuous pixel coordinate; pixel k spans [k, k+1)
  double v;
};

class Cubemap {
 public:
  Cubemap() = default;
  Cubemap(int face_size, int channels, double fill = 0.0);

  int face_size() const { return face_size_; }
  int channels() const { return channels_; }

  Image& face(FaceId f) { return faces_[static_cast<std::size_t>(face_index(f))]; }
  const Image& face(FaceId f) const { return faces_[static_cast<std::size_t>(face_index(f))]; }
  Image& face(int i) { return faces_.at(static_cast<std::size_t>(i)); }
  const Image& face(int i) const { return faces_.at(static_cast<std::size_t>(i)); }

  // Throws DomainError unless all faces are face_size x face_size x channels.
  void validate() const;

  bool operator==(const Cubemap&) const = default;

 private:
  int face_size_ = 0;
  int channels_ = 0;
  std::array<Image, kNumFaces> faces_;
};

struct EdgeSpec {
  int edge_index;
  FaceId left_face;
  Side left_side;
  FaceId right_face;
  Side right_side;
  // Position k along the left side meets position face_size-1-k on the right side.
  bool reversed;
};

enum class BandSide : std::uint8_t { Left, Right };

// Face-local axes: a rightward, b downward, both in [-1,1]. The unnormalized
// direction for each face is
//   Front (a,-b,1)  Right (1,-b,-a)  Back (-a,-b,-1)
//   Left (-1,-b,a)  Up (a,1,b)       Down (a,-1,-b)
// in a world frame with x right, y up, z forward.
Direction3 dir_from_face_coords(FaceId face, double a, double b);

Direction3 dir_from_face_pixel(FaceId face, int u, int v, int face_size);

// Largest-projection face; exact ties resolved Front > Right > Back > Left > Up > Down.
FacePoint face_pixel_from_dir(const Direction3& d, int face_size);

// Longitude atan2(x,z) in [-pi,pi), latitude asin(y).
struct LonLat {
  double lon;
  double lat;
};
LonLat lonlat_from_dir(const Direction3& d);
Direction3 dir_from_lonlat(double lon, double lat);

// Direction through the center of ERP pixel (i, j).
Direction3 dir_from_erp_pixel(int i, int j, int width, int height);

const std::array<EdgeSpec, kNumEdges>& edge_table();

// Pixel (u, v) on `face` at depth `depth` from `side`, position `pos` along it.
// Position increases with u on N/S sides and with v on E/W sides.
struct PixelIndex {
  int u;
  int v;
};
PixelIndex side_pixel(Side side, int pos, int depth, int face_size);

// Band of face_size rows by width_px columns; column 0 touches the edge and
// row k of the left band lines up with row k of the right band.
Image extract_edge_band(const Cubemap& cube, const EdgeSpec& edge, int width_px, BandSide side);

// Bilinear resampling, parallel over output rows.
Cubemap erp_to_cubemap(const ErpImage& erp, int face_size);
ErpImage cubemap_to_erp(const Cubemap& cube, int width, int height);

// Bilinear lookups used by the projections; exposed for tests.
void sample_erp(const Image& erp, double lon, double lat, double* out);
void sample_face(const Image& face, double u, double v, double* out);

}  // namespace pano
