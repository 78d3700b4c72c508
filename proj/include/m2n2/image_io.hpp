#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "m2n2/grid.hpp"
#include "m2n2/jbu.hpp"

namespace m2n2 {

/// 8-bit image, interleaved, 1 (gray) or 3 (RGB) channels.
struct Image8 {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;
};

/// Decodes PNG or JPEG (detected from the leading bytes) to RGB or gray.
Image8 decode_image(std::span<const std::uint8_t> bytes, int channels = 3);
Image8 read_image(const std::filesystem::path& path, int channels = 3);

std::vector<std::uint8_t> encode_png(const Image8& image);
void write_png(const Image8& image, const std::filesystem::path& path);

GuideImage to_guide(const Image8& rgb);
Image8 from_guide(const GuideImage& guide);

/// Binary mask <-> gray image (0 / 255). Any non-zero gray value reads as 1.
Mask mask_from_image(const Image8& gray);
Image8 mask_to_image(const Mask& mask);

/// Linear map of [lo, hi] to 0..255.
Image8 float_to_gray(const FloatMap& map, float lo, float hi);

/// Nearest-neighbor resize, used for diagnostic previews.
Image8 resize_nearest(const Image8& image, int height, int width);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace m2n2
