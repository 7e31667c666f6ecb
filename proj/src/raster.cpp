#include "pano/raster.hpp"

#include <algorithm>
#include <cmath>

namespace pano {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0) throw DomainError("Image: negative size");
  if (channels < 1) throw DomainError("Image: channels must be >= 1");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

Plane Image::channel(int c) const {
  Plane p(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) p(x, y) = at(x, y, c);
  return p;
}

void Image::set_channel(int c, const Plane& plane) {
  if (plane.width() != width_ || plane.height() != height_)
    throw DomainError("Image::set_channel: shape mismatch");
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) at(x, y, c) = plane(x, y);
}

ErpImage::ErpImage(Image image) : image_(std::move(image)) {
  if (image_.width() != 2 * image_.height())
    throw DomainError("ErpImage: width must equal 2 * height");
}

ErpImage::ErpImage(int width, int height, int channels, double fill)
    : ErpImage(Image(width, height, channels, fill)) {}

namespace {
void require_same_shape(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels())
    throw DomainError("image shape mismatch");
}
}  // namespace

double max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

double mean_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b);
  auto da = a.data();
  auto db = b.data();
  if (da.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) s += std::abs(da[i] - db[i]);
  return s / static_cast<double>(da.size());
}

}  // namespace pano
