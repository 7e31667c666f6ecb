#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pano/error.hpp"

namespace pano {

// Single-channel row-major plane of doubles.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw DomainError("Plane: negative size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Plane&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Channels-last interleaved raster. Values are nominally in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Plane channel(int c) const;
  void set_channel(int c, const Plane& plane);

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Equirectangular panorama: width == 2 * height.
class ErpImage {
 public:
  ErpImage() = default;
  explicit ErpImage(Image image);
  ErpImage(int width, int height, int channels, double fill = 0.0);

  const Image& image() const { return image_; }
  Image& image() { return image_; }
  int width() const { return image_.width(); }
  int height() const { return image_.height(); }
  int channels() const { return image_.channels(); }

 private:
  Image image_;
};

double max_abs_diff(const Image& a, const Image& b);
double mean_abs_diff(const Image& a, const Image& b);

}  // namespace pano
