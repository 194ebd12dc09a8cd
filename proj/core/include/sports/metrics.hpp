#pragma once

// Video panoptic quality, trajectory error and image fidelity metrics.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/image.hpp"
#include "sports/panoptic.hpp"

namespace sports {

inline constexpr double kTubeMatchIou = 0.5;

struct VpqResult {
  int k = 0;
  double total = 0.0;
  double things = 0.0;  // NaN when no thing class appears in the ground truth
  double stuff = 0.0;   // NaN when no stuff class appears in the ground truth
  int windows = 0;
};

/// Classes that carry instance ids; inferred from the ground truth when not
/// given (any pixel of the class with instance id > 0).
std::set<std::uint16_t> infer_thing_classes(std::span<const PanopticMap> gt);

/// VPQ over all windows of k+1 consecutive frames (stride 1).
///
/// Tubes are the per-code pixel sets stacked over the window. Pixels that are
/// void or unknown in the ground truth, or unknown in the prediction, are
/// ignored. Per class PQ = sum IoU(TP) / (TP + FP/2 + FN/2) with tube matching
/// at IoU > 0.5; a window's VPQ is the mean over classes present in its ground
/// truth, and the result averages windows.
VpqResult vpq(std::span<const PanopticMap> pred, std::span<const PanopticMap> gt, int k,
              const std::optional<std::set<std::uint16_t>>& thing_classes = std::nullopt);

struct Trajectory {
  std::vector<double> timestamps;
  std::vector<Pose> poses;  // camera -> world

  std::size_t size() const { return poses.size(); }
  void validate() const;
};

/// Pairs (est index, gt index) with |dt| <= max_dt, nearest first, one-to-one.
std::vector<std::pair<std::size_t, std::size_t>> associate_trajectories(const Trajectory& est,
                                                                        const Trajectory& gt,
                                                                        double max_dt = 0.01);

/// RMSE of camera positions after closed-form similarity (or rigid) alignment
/// of est onto gt. Needs >= 3 associated pairs.
double ate_rmse(const Trajectory& est, const Trajectory& gt, bool scale_align = true);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE) over all channels, capped at 99 dB.
double psnr(const RgbImage& a, const RgbImage& b, double peak = 255.0,
            std::span<const std::uint8_t> mask = {});

/// Mean SSIM (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03, L 255) over
/// valid window positions, averaged over the three channels.
double ssim(const RgbImage& a, const RgbImage& b);

/// `metric k total things stuff`
std::string format_metric_line(const std::string& metric, int k, double total, double things, double stuff);

}  // namespace sports
