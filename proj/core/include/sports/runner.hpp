#pragma once

// Pipeline stages shared by the command-line tool and the acceptance suite.
// Each stage has a pure compute step and a writer that stores its artifacts
// atomically under an output directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sports/config.hpp"
#include "sports/metrics.hpp"
#include "sports/odometry.hpp"
#include "sports/rendering.hpp"
#include "sports/sequence.hpp"
#include "sports/tracking.hpp"
#include "sports/warpfusion.hpp"

namespace sports {

/// Explicit flag if given, else SPORTS_THREADS, else 1.
int resolve_threads(std::optional<int> flag);

// ---- odometry ----

struct OdometryOutput {
  Trajectory trajectory;  // camera -> world, timestamps from the sequence
  OdometryResult result;
};

/// Initial poses come from `initial` (camera -> world) when given, else identity.
OdometryOutput run_odometry_stage(const Sequence& seq, const RunConfig& config, int threads,
                                  const std::optional<Trajectory>& initial = std::nullopt);
/// trajectory.tum, depth/NNNNNN.dmap, and odometry_report.txt (ATE when the
/// sequence has ground truth).
void write_odometry_outputs(const OdometryOutput& out, const Sequence& seq, const RunConfig& config,
                            const std::filesystem::path& dir);

// ---- fusion ----

/// Per frame t >= 1: frame t-1 RGB features forward-warped by its flow, then
/// fused with frame t at every pyramid level. Frame 0 has no entry.
std::vector<std::vector<FeatureMap>> run_fusion_stage(const Sequence& seq, const RunConfig& config,
                                                      const AttentionGate& gate);
/// Gate with C = 3 RGB channels; seeded from config.seed.
AttentionGate default_gate(const Sequence& seq, const RunConfig& config);
/// fused/NNNNNN_lK.feat
void write_fusion_outputs(const std::vector<std::vector<FeatureMap>>& fused, const std::filesystem::path& dir);

// ---- tracking ----

struct TrackOutput {
  std::vector<PanopticMap> maps;
  std::vector<MatchRecord> report;
};

/// Frame 0 takes fresh ids; every later frame is post-matched against the
/// repaired previous frame warped by its flow.
TrackOutput run_tracking_stage(const Sequence& seq, const RunConfig& config);
/// panoptic/NNNNNN.pmap and match_report.txt
void write_tracking_outputs(const TrackOutput& out, const std::filesystem::path& dir);

// ---- rendering ----

struct RenderOutput {
  DescriptorCloud cloud;
  std::vector<Composite> images;    // one per frame, seen from that frame's pose
  std::vector<double> psnr;         // on covered static pixels
  std::vector<std::uint32_t> hard;  // argTop-n frame ids by image quality score
};

/// Per-pixel exclusion mask (1 = dynamic) from the sequence's motion scores
/// refined by its panoptic labels.
std::vector<std::vector<std::uint8_t>> dynamic_exclusion(const Sequence& seq, double tau);

/// Cloud from all frames (stride from config) placed with `trajectory`
/// (camera -> world), rendered back into every frame. `hard_count` frames are
/// selected as hard samples.
RenderOutput run_render_stage(const Sequence& seq, const Trajectory& trajectory, const RunConfig& config,
                              std::size_t hard_count = 1);
/// cloud.ply, render/NNNNNN.ppm and render_report.txt
void write_render_outputs(const RenderOutput& out, const std::filesystem::path& dir);

// ---- evaluation reports ----

struct MetricLine {
  std::string metric;
  int k = 0;
  double total = 0.0;
  double things = 0.0;
  double stuff = 0.0;
};

struct MetricReport {
  std::vector<MetricLine> lines;

  /// `metric k total things stuff` per line.
  std::string text() const;
  /// `metric.kK.total=...` style lines.
  std::string key_values() const;
};

/// VPQ for each k plus a `vpq_mean` line holding the arithmetic mean over ks;
/// its k field carries the number of ks averaged.
MetricReport vpq_report(const std::vector<PanopticMap>& pred, const std::vector<PanopticMap>& gt,
                        const std::vector<int>& ks);

/// Writes report.txt and report.kv into dir.
void write_report(const MetricReport& report, const std::filesystem::path& dir, const std::string& stem = "report");

// ---- full pipeline ----

/// odometry -> tracking -> fusion -> rendering -> evaluation, all artifacts
/// under dir.
void run_pipeline(const Sequence& seq, const RunConfig& config, int threads, const std::filesystem::path& dir);

}  // namespace sports
