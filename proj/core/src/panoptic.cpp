#include "sports/panoptic.hpp"

#include <map>
#include <stdexcept>

namespace sports {

PanopticMap::PanopticMap(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("PanopticMap: negative size");
  const auto n = static_cast<std::size_t>(w) * h;
  semantic.assign(n, 0);
  instance.assign(n, 0);
  unknown.assign(n, 0);
}

std::size_t Segment::area() const {
  std::size_t a = 0;
  for (const auto& r : runs) a += r.length;
  return a;
}

std::vector<std::uint32_t> Segment::pixels() const {
  std::vector<std::uint32_t> out;
  out.reserve(area());
  for (const auto& r : runs)
    for (std::uint32_t k = 0; k < r.length; ++k) out.push_back(r.start + k);
  return out;
}

Segment Segment::from_pixels(int frame, std::uint16_t cls, std::uint16_t inst, int width, int height,
                             const std::vector<std::uint32_t>& sorted_pixels) {
  Segment s;
  s.frame = frame;
  s.class_id = cls;
  s.instance_id = inst;
  s.width = width;
  s.height = height;
  for (std::uint32_t p : sorted_pixels) {
    if (!s.runs.empty() && s.runs.back().start + s.runs.back().length == p)
      ++s.runs.back().length;
    else
      s.runs.push_back({p, 1});
  }
  return s;
}

std::vector<Segment> extract_segments(const PanopticMap& map, int frame, bool skip_unknown) {
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_code;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.semantic[i] == 0) continue;
    if (skip_unknown && map.unknown[i]) continue;
    by_code[map.code(i)].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<Segment> out;
  out.reserve(by_code.size());
  for (const auto& [code, pix] : by_code)
    out.push_back(Segment::from_pixels(frame, static_cast<std::uint16_t>(code / kPanopticDivisor),
                                       static_cast<std::uint16_t>(code % kPanopticDivisor), map.width,
                                       map.height, pix));
  return out;
}

}  // namespace sports
