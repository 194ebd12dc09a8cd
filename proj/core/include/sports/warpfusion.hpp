#pragma once

// Depth-ordered forward warping of feature and label maps, channel-attention
// gated fusion of warped and current features, and multi-scale pyramids.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/panoptic.hpp"

namespace sports {

/// Per-pixel displacement from frame t to frame t+1, in pixels.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<Vector2> flow;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h);
  std::size_t size() const { return flow.size(); }
};

/// H x W x C feature map stored row-major with channels innermost.
struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int w, int h, int c, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  double& at(std::size_t pixel, int ch) { return data[pixel * channels + ch]; }
  double at(std::size_t pixel, int ch) const { return data[pixel * channels + ch]; }
  bool same_shape(const FeatureMap& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

enum class WarpMode {
  kForwardSplat,    // each source pixel written to round(x + f(x)), nearer overwrites farther
  kBackwardSample,  // out(x) = src(round(x + f(x))) with the flow defined on the output grid
};

/// For each output pixel, the source pixel that landed there (or -1).
struct WarpIndex {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> source;

  std::vector<std::uint8_t> coverage() const;
};

/// Splat order is descending source depth, ties by ascending row-major index,
/// with later writes winning. Pixels with invalid flow or depth are not splatted.
WarpIndex compute_warp(const FlowField& flow, const DepthMap& depth,
                       WarpMode mode = WarpMode::kForwardSplat);

struct WarpedFeatures {
  FeatureMap map;
  std::vector<std::uint8_t> coverage;
};

struct WarpedPanoptic {
  PanopticMap map;  // uncovered pixels are void
  std::vector<std::uint8_t> coverage;
};

WarpedFeatures warp_forward(const FeatureMap& src, const FlowField& flow, const DepthMap& depth,
                            WarpMode mode = WarpMode::kForwardSplat);
WarpedPanoptic warp_forward(const PanopticMap& src, const FlowField& flow, const DepthMap& depth,
                            WarpMode mode = WarpMode::kForwardSplat);

/// Channel gate and n x n fusion kernel of one fusion branch.
///
/// The gate maps the 2C pooled channel means through a per-channel affine map
/// followed by the logistic function. The kernel maps 2C input channels to C
/// output channels; kernel[((ky * n + kx) * 2C + cin) * C + cout].
struct AttentionGate {
  int channels = 1;     // C
  int kernel_size = 1;  // n, odd
  std::vector<double> scale;   // 2C
  std::vector<double> bias;    // 2C
  std::vector<double> kernel;  // n * n * 2C * C

  static AttentionGate zeros(int channels, int kernel_size);
  /// Deterministic initialisation: gate parameters ~ N(0, 0.5), kernel entries
  /// ~ N(0, 1 / (n * n * 2C)).
  static AttentionGate seeded(int channels, int kernel_size, std::uint64_t seed);

  void validate() const;
  std::size_t kernel_index(int ky, int kx, int cin, int cout) const {
    return ((static_cast<std::size_t>(ky) * kernel_size + kx) * 2 * channels + cin) * channels + cout;
  }
  bool operator==(const AttentionGate&) const = default;
};

/// Fusion kernel size for a base resolution: 3 up to 1242 x 375 pixels, 7 above.
int default_fusion_kernel(int width, int height);

/// Channel concatenation, warped first.
FeatureMap concat_channels(const FeatureMap& warped, const FeatureMap& current);

/// logistic(scale * mean_c + bias) for each of the 2C channels.
std::vector<double> channel_attention(const FeatureMap& concat, const AttentionGate& gate);

/// Attention-weighted concatenation convolved to C channels (zero padding,
/// stride 1). `frozen_weights` bypasses the gate when provided.
FeatureMap ag_fuse(const FeatureMap& current, const FeatureMap& warped, const AttentionGate& gate,
                   std::optional<std::span<const double>> frozen_weights = std::nullopt);

/// Direction for ag_fuse_jvp. Empty parameter vectors mean zero; feature
/// perturbations with zero channels mean zero.
struct FusionDirection {
  FeatureMap d_current;
  FeatureMap d_warped;
  std::vector<double> d_scale;
  std::vector<double> d_bias;
  std::vector<double> d_kernel;
};

/// Directional derivative of ag_fuse with respect to features and gate.
FeatureMap ag_fuse_jvp(const FeatureMap& current, const FeatureMap& warped, const AttentionGate& gate,
                       const FusionDirection& direction);

/// One independent gate and kernel per fusion branch.
struct FusionModel {
  std::vector<AttentionGate> branches;

  static FusionModel seeded(int branches, int channels, int kernel_size, std::uint64_t seed);
  std::vector<FeatureMap> fuse(const FeatureMap& current, const FeatureMap& warped) const;
};

struct FeaturePyramid {
  std::vector<FeatureMap> levels;
  std::vector<std::vector<std::uint8_t>> valid;
};

/// Level k has size ceil(H / 2^k) x ceil(W / 2^k), k = 0 .. levels-1; each
/// level is the 2x2 average over valid pixels of the previous one.
FeaturePyramid build_pyramid(const FeatureMap& base, int levels,
                             std::span<const std::uint8_t> valid = {});

/// Applies ag_fuse independently at every pyramid scale.
std::vector<FeatureMap> fuse_pyramid(const FeaturePyramid& current, const FeaturePyramid& warped,
                                     const AttentionGate& gate);

}  // namespace sports
