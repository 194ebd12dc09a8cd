#include "sports/rendering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sports {

DescriptorCloud accumulate_points(std::span<const RenderFrame> frames, std::span<const Pose> trajectory,
                                  const CameraModel& cam, int stride) {
  if (stride < 1) throw std::invalid_argument("accumulate_points: stride must be >= 1");
  if (trajectory.size() < frames.size()) throw std::invalid_argument("accumulate_points: missing pose for a frame");
  DescriptorCloud cloud;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const RenderFrame& fr = frames[f];
    if (fr.depth == nullptr || !fr.depth->same_shape(cam.width, cam.height))
      throw std::invalid_argument("accumulate_points: depth map missing or mis-sized");
    if (fr.rgb != nullptr && (fr.rgb->width != cam.width || fr.rgb->height != cam.height))
      throw std::invalid_argument("accumulate_points: image size does not match camera");
    if (!fr.dynamic.empty() && fr.dynamic.size() != cam.pixel_count())
      throw std::invalid_argument("accumulate_points: dynamic mask size mismatch");
    if (!fr.descriptors.empty() && fr.descriptors.size() != cam.pixel_count())
      throw std::invalid_argument("accumulate_points: descriptor count mismatch");
    const Pose camera_to_world = trajectory[f].inverse();
    for (int r = 0; r < cam.height; r += stride) {
      for (int c = 0; c < cam.width; c += stride) {
        const std::size_t idx = static_cast<std::size_t>(r) * cam.width + c;
        if (!fr.depth->is_valid(idx)) continue;
        if (!fr.dynamic.empty() && fr.dynamic[idx]) continue;
        CloudPoint pt;
        pt.position = camera_to_world * backproject(cam, Vector2(c, r), fr.depth->depth[idx]);
        if (!fr.descriptors.empty()) {
          pt.descriptor = fr.descriptors[idx];
        } else if (fr.rgb != nullptr) {
          for (int ch = 0; ch < 3; ++ch) pt.descriptor[ch] = static_cast<float>(fr.rgb->at(r, c, ch) / 255.0);
        }
        pt.frame = static_cast<std::uint32_t>(f);
        pt.pixel = static_cast<std::uint32_t>(idx);
        cloud.points.push_back(pt);
      }
    }
  }
  return cloud;
}

RasterPyramid rasterize(const DescriptorCloud& cloud, const Pose& view, const CameraModel& cam, int levels) {
  if (levels < 1) throw std::invalid_argument("rasterize: level count must be >= 1");
  RasterPyramid pyr;
  std::vector<Vector3> in_camera(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) in_camera[i] = view * cloud.points[i].position;

  for (int k = 0; k < levels; ++k) {
    const CameraModel lc = cam.scaled(k);
    RasterLevel level;
    level.width = lc.width;
    level.height = lc.height;
    level.descriptor.assign(lc.pixel_count(), Descriptor{});
    level.depth.assign(lc.pixel_count(), std::numeric_limits<double>::infinity());
    level.point.assign(lc.pixel_count(), -1);
    for (std::size_t i = 0; i < in_camera.size(); ++i) {
      const auto uv = project(lc, in_camera[i]);
      if (!uv) continue;
      const double fc = std::floor(uv->x() + 0.5);
      const double fr = std::floor(uv->y() + 0.5);
      if (fc < 0 || fr < 0 || fc >= lc.width || fr >= lc.height) continue;
      const std::size_t idx = static_cast<std::size_t>(fr) * lc.width + static_cast<std::size_t>(fc);
      const double z = in_camera[i].z();
      if (z < level.depth[idx]) {
        level.depth[idx] = z;
        level.point[idx] = static_cast<std::int64_t>(i);
        level.descriptor[idx] = cloud.points[i].descriptor;
      }
    }
    pyr.push_back(std::move(level));
  }
  return pyr;
}

Composite composite(const RasterPyramid& pyramid) {
  if (pyramid.empty()) return {};
  const RasterLevel& base = pyramid.front();
  Composite out{RgbImage(base.width, base.height), std::vector<std::uint8_t>(base.point.size(), 0)};
  for (int r = 0; r < base.height; ++r) {
    for (int c = 0; c < base.width; ++c) {
      const Descriptor* src = nullptr;
      for (std::size_t k = 0; k < pyramid.size() && src == nullptr; ++k) {
        const RasterLevel& lvl = pyramid[k];
        const int lr = r >> k;
        const int lc = c >> k;
        if (lr >= lvl.height || lc >= lvl.width) continue;
        const std::size_t idx = static_cast<std::size_t>(lr) * lvl.width + lc;
        if (lvl.occupied(idx)) src = &lvl.descriptor[idx];
      }
      if (src == nullptr) continue;
      out.coverage[static_cast<std::size_t>(r) * base.width + c] = 1;
      for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = to_u8((*src)[ch]);
    }
  }
  return out;
}

std::vector<std::uint32_t> select_hard_samples(std::span<const SampleScore> scores, std::size_t n) {
  if (n > scores.size()) throw std::invalid_argument("select_hard_samples: n exceeds the number of samples");
  std::vector<SampleScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const SampleScore& a, const SampleScore& b) {
    if (a.quality != b.quality) return a.quality > b.quality;
    return a.image_id < b.image_id;
  });
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(sorted[i].image_id);
  return ids;
}

double image_quality_score(const RgbImage& rendered, const RgbImage& reference, std::span<const std::uint8_t> mask) {
  if (!rendered.same_shape(reference)) throw std::invalid_argument("image_quality_score: size mismatch");
  if (!mask.empty() && mask.size() != rendered.pixel_count())
    throw std::invalid_argument("image_quality_score: mask size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < rendered.pixel_count(); ++p) {
    if (!mask.empty() && !mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch)
      sum += std::abs(static_cast<int>(rendered.data[3 * p + ch]) - static_cast<int>(reference.data[3 * p + ch]));
    count += 3;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace sports
