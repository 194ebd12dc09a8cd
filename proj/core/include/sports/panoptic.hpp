#pragma once

// Per-pixel panoptic labels and run-length encoded segments.

#include <cstdint>
#include <vector>

namespace sports {

/// Panoptic code = semantic * kPanopticDivisor + instance.
inline constexpr std::uint32_t kPanopticDivisor = 10000;

struct PanopticMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> semantic;  // 0 = void
  std::vector<std::uint16_t> instance;  // 0 = stuff / no instance
  std::vector<std::uint8_t> unknown;    // excluded from flow matching

  PanopticMap() = default;
  PanopticMap(int w, int h);

  std::size_t size() const { return semantic.size(); }
  std::uint32_t code(std::size_t idx) const {
    return static_cast<std::uint32_t>(semantic[idx]) * kPanopticDivisor + instance[idx];
  }
  bool same_shape(const PanopticMap& o) const { return width == o.width && height == o.height; }
  bool operator==(const PanopticMap&) const = default;
};

struct PixelRun {
  std::uint32_t start = 0;  // row-major pixel index
  std::uint32_t length = 0;
  bool operator==(const PixelRun&) const = default;
};

struct Segment {
  int frame = 0;
  std::uint16_t class_id = 0;
  std::uint16_t instance_id = 0;
  int width = 0;
  int height = 0;
  std::vector<PixelRun> runs;  // sorted, non-overlapping

  std::uint32_t code() const {
    return static_cast<std::uint32_t>(class_id) * kPanopticDivisor + instance_id;
  }
  std::size_t area() const;
  /// Expands the runs into sorted pixel indices.
  std::vector<std::uint32_t> pixels() const;
  static Segment from_pixels(int frame, std::uint16_t cls, std::uint16_t inst, int width, int height,
                             const std::vector<std::uint32_t>& sorted_pixels);
};

/// One segment per distinct non-void (class, instance) label, ordered by
/// panoptic code. Unknown-flagged pixels are skipped when requested.
std::vector<Segment> extract_segments(const PanopticMap& map, int frame, bool skip_unknown = true);

}  // namespace sports
