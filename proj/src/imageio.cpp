#include "pano/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace pano {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

unsigned quantize(double value, int bit_depth) {
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  const double v = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
  return static_cast<unsigned>(std::floor(v * maxv + 0.5));
}

Image load_image(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open image '" + path.string() + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("'" + path.string() + "' is not a PNG file");

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  // Everything that can longjmp lives inside this block; no C++ objects with
  // non-trivial destructors are created between setjmp and the reads.
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode '" + path.string() + "': " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  int color_type = 0;
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    bit_depth = 8;
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  if (channels == 2 || channels == 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported channel layout in '" + path.string() + "'");
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (bit_depth != 8 && bit_depth != 16)
    throw IoError("unsupported bit depth " + std::to_string(bit_depth) + " in '" + path.string() + "'");

  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  auto out = img.data();
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buffer[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const unsigned v = static_cast<unsigned>(buffer[2 * i]) | (static_cast<unsigned>(buffer[2 * i + 1]) << 8);
      out[i] = v / 65535.0;
    }
  }
  return img;
}

void save_image(const Image& image, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw IoError("unsupported bit depth " + std::to_string(bit_depth));
  if (image.channels() != 1 && image.channels() != 3)
    throw IoError("can only write 1- or 3-channel images, got " + std::to_string(image.channels()));
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  const std::size_t bps = bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(w) * h * ch * bps);
  auto in = image.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const unsigned q = quantize(in[i], bit_depth);
    if (bps == 1) {
      buffer[i] = static_cast<unsigned char>(q);
    } else {
      buffer[2 * i] = static_cast<unsigned char>(q >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
  }

  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write image '" + path.string() + "'");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  const std::size_t rowbytes = static_cast<std::size_t>(w) * ch * bps;
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = buffer.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode '" + path.string() + "': " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Cubemap load_cubemap(const std::filesystem::path& dir) {
  std::array<Image, kNumFaces> faces;
  for (FaceId f : kAllFaces) {
    const auto p = dir / (std::string(face_name(f)) + ".png");
    if (!std::filesystem::exists(p))
      throw IoError("cubemap '" + dir.string() + "' is missing face '" + std::string(face_name(f)) + "' (" +
                    p.string() + ")");
    faces[static_cast<std::size_t>(face_index(f))] = load_image(p);
  }
  const Image& ref = faces[0];
  if (ref.width() != ref.height())
    throw IoError("cubemap '" + dir.string() + "': faces must be square");
  for (FaceId f : kAllFaces) {
    const Image& img = faces[static_cast<std::size_t>(face_index(f))];
    if (img.width() != ref.width() || img.height() != ref.height() || img.channels() != ref.channels())
      throw IoError("cubemap '" + dir.string() + "': face '" + std::string(face_name(f)) +
                    "' differs in size or channels from 'front'");
  }
  Cubemap cube(ref.width(), ref.channels());
  for (FaceId f : kAllFaces) cube.face(f) = std::move(faces[static_cast<std::size_t>(face_index(f))]);
  return cube;
}

void save_cubemap(const Cubemap& cube, const std::filesystem::path& dir, int bit_depth) {
  cube.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  for (FaceId f : kAllFaces) save_image(cube.face(f), dir / (std::string(face_name(f)) + ".png"), bit_depth);
}

}  // namespace pano
