#pragma once

// Run configuration and its flat key=value file format.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sports/odometry.hpp"
#include "sports/tracking.hpp"

namespace sports {

struct RunConfig {
  double eta = kDefaultEta;
  double tau = kDefaultTau;
  int window = kDefaultWindow;
  double alpha1 = kDefaultAlpha1;
  double alpha2 = kDefaultAlpha2;
  int pyramid_levels = 4;  // K
  int fusion_kernel = 3;   // n
  int dba_iters = 10;
  int panoptic_rounds = 1;
  int stride = 1;
  std::uint64_t seed = 0;
  double base_confidence = kDefaultBaseConfidence;
  double dynamic_residual_sigmas = 3.0;
  double iou_floor = kDefaultIouFloor;
  bool use_warped_previous = true;
  bool scale_align = true;
  bool propagate_depth = true;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  OdometryOptions odometry_options(int threads) const;
};

/// `key = value` lines; blank lines and text after '#' are ignored. Unknown
/// keys, duplicate keys and malformed values are errors (IoError with the
/// byte offset of the line).
RunConfig parse_config(std::string_view text, const std::string& name, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);
/// Every key, one per line, in a fixed order; parse_config reads it back exactly.
std::string format_config(const RunConfig& config);

}  // namespace sports
