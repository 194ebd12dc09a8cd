#pragma once

#include <cstdint>
#include <vector>

namespace sports {

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  std::uint8_t at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  bool same_shape(const RgbImage& o) const { return width == o.width && height == o.height; }
};

/// Round a [0,1] intensity to 8 bits, clamping out-of-range input.
std::uint8_t to_u8(double v);

}  // namespace sports
