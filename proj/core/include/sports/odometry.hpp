#pragma once

// Frame-graph dense bundle adjustment with panoptic-aware confidence weights,
// dynamic-mask refinement and two-pass depth propagation.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/panoptic.hpp"
#include "sports/warpfusion.hpp"

namespace sports {

inline constexpr double kDefaultEta = 10.0;
inline constexpr double kDefaultTau = 0.5;
inline constexpr int kDefaultWindow = 2;
inline constexpr double kInitialDamping = 1e-4;
/// Raw confidence logit w when no learned confidence is supplied: -eta, so a
/// static pixel sits at the logistic midpoint and a dynamic one near zero.
inline constexpr double kDefaultBaseConfidence = -kDefaultEta;

/// Two raw scores per pixel: (static, dynamic).
struct DynamicMask {
  int width = 0;
  int height = 0;
  std::vector<double> scores;

  DynamicMask() = default;
  DynamicMask(int w, int h);
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  /// logistic(dynamic - static)
  double probability(std::size_t idx) const;
};

/// Per-pixel value in [0, 1], 1 = dynamic.
struct RefinedDynamicMask {
  int width = 0;
  int height = 0;
  std::vector<double> value;
};

/// Two confidence channels (x, y) per pixel.
struct ConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ConfidenceMap() = default;
  ConfidenceMap(int w, int h, double fill = 0.0);
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
};

/// Stuff -> 0; thing instance -> 1 iff its mean dynamic probability exceeds
/// tau; unknown-flagged pixels -> 1. Void pixels follow their own probability.
RefinedDynamicMask refine_dynamic_mask(const DynamicMask& raw, const PanopticMap& pan, double tau = kDefaultTau);

/// logistic(w + (1 - mdp) * eta), both channels.
ConfidenceMap panoptic_confidence(const ConfidenceMap& w, const RefinedDynamicMask& mdp, double eta = kDefaultEta);

struct GraphFrame {
  Pose pose;  // world -> camera
  DepthMap depth;
  PanopticMap panoptic;
};

struct GraphEdge {
  int i = 0;
  int j = 0;
  std::vector<Vector2> target;             // u*_ij per pixel of frame i
  std::vector<std::uint8_t> target_valid;
  ConfidenceMap raw_confidence;            // w_ij, pre-logistic
  ConfidenceMap weight;                    // residual weights used by the solver
  DynamicMask dynamic;                     // M^d_ij
};

/// Covisibility graph. Frame 0 is the gauge anchor.
struct FrameGraph {
  std::vector<GraphFrame> frames;
  std::vector<GraphEdge> edges;

  /// Throws std::invalid_argument on dangling or self edges or size mismatch.
  void validate(const CameraModel& cam) const;
};

/// Correspondence targets for edge (i, j), i < j, by chaining the forward
/// flows of frames i .. j-1. Intermediate flows are sampled bilinearly; a
/// target is invalid where a sample falls outside the image, hits an invalid
/// flow, or straddles a flow discontinuity larger than `max_flow_jump` pixels.
/// When `labels` holds one panoptic map per frame, a sample is also rejected
/// unless all four neighbours carry the source pixel's semantic class, which
/// catches chains that slip onto an occluding surface.
void compose_flow_targets(std::span<const FlowField> flows, int i, int j, std::vector<Vector2>& target,
                          std::vector<std::uint8_t>& valid, double max_flow_jump = 0.5,
                          std::span<const PanopticMap> labels = {});

/// Confidence-weighted squared reprojection residual over all edges.
double dba_cost(const FrameGraph& graph, const CameraModel& cam);

struct DbaOptions {
  double damping = kInitialDamping;
  int max_retries = 5;
  bool optimize_poses = true;
  int threads = 1;
};

enum class DbaStatus { kAccepted, kConverged, kRejected };

struct DbaStepResult {
  DbaStatus status = DbaStatus::kConverged;
  std::vector<Tangent> pose_increments;                   // one per frame; anchor stays zero
  std::vector<std::vector<double>> inverse_depth_increments;  // one per frame, per pixel
  double cost_before = 0.0;
  double cost = 0.0;
  double damping = 0.0;  // damping of the accepted (or last tried) solve
  int retries = 0;
};

class DbaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One damped Gauss-Newton step on poses (6 dof per non-anchor frame) and
/// per-pixel inverse depths. Depths are eliminated by a scalar Schur
/// complement. The step is applied to `graph` only if the cost decreases;
/// otherwise damping grows x10 for up to max_retries retries.
DbaStepResult dba_step(FrameGraph& graph, const CameraModel& cam, const DbaOptions& options = {});

/// Analytic residual Jacobians for a single pixel of edge `edge` (rows x/y,
/// columns: 6 for pose i, 6 for pose j, 1 for inverse depth). Returns false if
/// the pixel produces no residual.
struct PixelLinearization {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 13> jacobian;
};
bool linearize_pixel(const FrameGraph& graph, const CameraModel& cam, std::size_t edge, std::size_t pixel,
                     PixelLinearization& out);

/// Raw per-frame inputs to odometry.
struct OdometryFrame {
  Pose initial_pose;  // world -> camera
  DepthMap depth;
  PanopticMap panoptic;
  FlowField flow_to_next;  // empty for the last frame
  DynamicMask dynamic;     // empty means all-static scores
};

struct OdometryOptions {
  int iterations = 10;
  int panoptic_rounds = 1;
  int window = kDefaultWindow;
  double eta = kDefaultEta;
  double tau = kDefaultTau;
  double base_confidence = kDefaultBaseConfidence;  // raw w fed to the panoptic confidence
  double dynamic_residual_sigmas = 3.0;  // robust sigmas at which the mask update is zero
  bool propagate_depth = true;  // false leaves dynamic pixels of D' invalid
  int threads = 1;
};

struct OdometryResult {
  std::vector<Pose> poses;  // world -> camera, anchored at frame 0
  std::vector<DepthMap> depths;
  std::vector<RefinedDynamicMask> dynamic;  // per frame, from edges leaving the frame
  std::vector<double> round_costs;
  int accepted_steps = 0;
};

/// Edges (i, j) with i < j <= i + window.
FrameGraph build_frame_graph(std::span<const OdometryFrame> frames, const CameraModel& cam, int window,
                             double base_confidence);

/// Residual-driven dynamic-score increment for every edge: the dynamic channel
/// grows by clamp(|r| / t - 1, -2, 2) with t = sigmas * 1.4826 * median |r| over
/// the edge, applied through retract_state.
void update_dynamic_masks(FrameGraph& graph, const CameraModel& cam, double residual_sigmas);

OdometryResult run_odometry(std::span<const OdometryFrame> frames, const CameraModel& cam,
                            const OdometryOptions& options = {});

/// D' where valid, D'' elsewhere.
DepthMap propagate_depth(const DepthMap& refined, const DepthMap& dense);

}  // namespace sports
