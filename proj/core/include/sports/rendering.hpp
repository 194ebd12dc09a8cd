#pragma once

// Descriptor point clouds, Z-buffered pyramid rasterisation and
// coarse-to-fine compositing.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/image.hpp"

namespace sports {

inline constexpr int kDescriptorSize = 8;
using Descriptor = std::array<float, kDescriptorSize>;

struct CloudPoint {
  Vector3 position;  // world frame
  Descriptor descriptor{};
  std::uint32_t frame = 0;
  std::uint32_t pixel = 0;
};

struct DescriptorCloud {
  std::vector<CloudPoint> points;
};

/// Inputs needed to lift one frame into the cloud.
struct RenderFrame {
  const RgbImage* rgb = nullptr;
  const DepthMap* depth = nullptr;
  std::span<const std::uint8_t> dynamic;  // 1 = excluded; empty = none
  std::span<const Descriptor> descriptors;  // optional per-pixel override
};

/// Every `stride`-th valid, non-dynamic pixel (in both image axes) is
/// backprojected and moved to world coordinates with inverse(pose).
/// Descriptors default to RGB / 255 in channels 0-2 and zeros elsewhere.
DescriptorCloud accumulate_points(std::span<const RenderFrame> frames, std::span<const Pose> trajectory,
                                  const CameraModel& cam, int stride = 1);

struct RasterLevel {
  int width = 0;
  int height = 0;
  std::vector<Descriptor> descriptor;
  std::vector<double> depth;          // +inf where empty
  std::vector<std::int64_t> point;    // winning point index, -1 where empty

  bool occupied(std::size_t idx) const { return point[idx] >= 0; }
};

using RasterPyramid = std::vector<RasterLevel>;

/// Level k uses intrinsics scaled by 2^-k. Each point lands on the nearest
/// pixel; the minimum-depth point wins, ties to the smaller point index.
RasterPyramid rasterize(const DescriptorCloud& cloud, const Pose& view, const CameraModel& cam, int levels);

struct Composite {
  RgbImage image;
  std::vector<std::uint8_t> coverage;
};

/// Finest-first hole filling: an empty pixel takes the descriptor of its
/// nearest occupied ancestor at a coarser level. RGB = channels 0-2 clamped
/// to [0, 1].
Composite composite(const RasterPyramid& pyramid);

struct SampleScore {
  std::uint32_t image_id = 0;
  double quality = 0.0;  // lower is better
};

/// Ids of the n largest quality scores (worst first), ties to the smaller id.
std::vector<std::uint32_t> select_hard_samples(std::span<const SampleScore> scores, std::size_t n);

/// Mean absolute RGB error in [0, 255] units, optionally restricted to a mask.
double image_quality_score(const RgbImage& rendered, const RgbImage& reference,
                           std::span<const std::uint8_t> mask = {});

}  // namespace sports
