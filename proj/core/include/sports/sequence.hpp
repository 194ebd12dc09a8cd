#pragma once

// On-disk sequences: a key=value manifest listing per-frame files relative to
// the manifest's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/image.hpp"
#include "sports/metrics.hpp"
#include "sports/odometry.hpp"
#include "sports/panoptic.hpp"
#include "sports/warpfusion.hpp"

namespace sports {

struct FrameState {
  RgbImage rgb;
  DepthMap depth;
  FlowField flow_to_next;  // empty (0 x 0) for the last frame
  PanopticMap panoptic;
  DynamicMask dynamic;  // empty when the sequence carries no motion scores

  bool operator==(const FrameState& o) const;
};

struct Sequence {
  CameraModel camera;
  std::vector<FrameState> frames;
  std::optional<Trajectory> groundtruth;  // camera -> world
  std::string split = "test";
  double frame_interval = 0.1;  // seconds; used when no trajectory gives timestamps

  double timestamp(std::size_t frame) const;
};

inline constexpr const char* kManifestName = "manifest.txt";

/// Accepts the manifest file or the directory holding manifest.txt.
Sequence load_sequence(const std::filesystem::path& manifest);
/// Writes rgb/, depth/, flow/, gt/, dynamic/, groundtruth.tum and manifest.txt
/// under `root`.
void save_sequence(const Sequence& sequence, const std::filesystem::path& root);

/// Panoptic maps of every frame in a directory of NNNNNN.pmap files (or its
/// panoptic/ subdirectory), or of a sequence when given a manifest / sequence
/// directory.
std::vector<PanopticMap> load_panoptic_series(const std::filesystem::path& path);

std::string frame_stem(std::size_t frame);

}  // namespace sports
