#pragma once

#include <filesystem>

#include "pano/geometry.hpp"
#include "pano/raster.hpp"

namespace pano {

// PNG, 8- or 16-bit, grayscale or RGB (alpha is dropped, palettes expanded).
// Values are normalized to [0,1].
Image load_image(const std::filesystem::path& path);

// Values are clamped to [0,1] and quantized with round-half-up.
void save_image(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

// Six PNGs named front/right/back/left/up/down.png.
Cubemap load_cubemap(const std::filesystem::path& dir);
void save_cubemap(const Cubemap& cube, const std::filesystem::path& dir, int bit_depth = 8);

// Quantization used by save_image, exposed for tests.
unsigned quantize(double value, int bit_depth);

}  // namespace pano
