#include "sports/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sports {

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("RgbImage: negative size");
  data.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

std::uint8_t to_u8(double v) {
  if (!(v > 0.0)) return 0;
  return static_cast<std::uint8_t>(std::lround(std::min(v, 1.0) * 255.0));
}

}  // namespace sports
