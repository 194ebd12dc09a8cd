#include "sports/runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "sports/io.hpp"

namespace sports {
namespace {

namespace fs = std::filesystem;

FeatureMap rgb_features(const RgbImage& img) {
  FeatureMap f(img.width, img.height, 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    for (int ch = 0; ch < 3; ++ch) f.at(p, ch) = img.data[3 * p + ch] / 255.0;
  return f;
}

std::string format_metric_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw std::invalid_argument("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("SPORTS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw std::invalid_argument("SPORTS_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

OdometryOutput run_odometry_stage(const Sequence& seq, const RunConfig& config, int threads,
                                  const std::optional<Trajectory>& initial) {
  config.validate();
  if (seq.frames.size() < 2) throw std::invalid_argument("odometry needs at least two frames");
  if (initial && initial->size() != seq.frames.size())
    throw std::invalid_argument("initial trajectory length does not match the sequence");
  std::vector<OdometryFrame> frames;
  frames.reserve(seq.frames.size());
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const FrameState& fs_ = seq.frames[f];
    OdometryFrame of;
    of.initial_pose = initial ? initial->poses[f].inverse() : Pose::identity();
    of.depth = fs_.depth;
    of.panoptic = fs_.panoptic;
    of.flow_to_next = fs_.flow_to_next;
    of.dynamic = fs_.dynamic;
    frames.push_back(std::move(of));
  }
  OdometryOutput out;
  out.result = run_odometry(frames, seq.camera, config.odometry_options(threads));
  for (std::size_t f = 0; f < out.result.poses.size(); ++f) {
    out.trajectory.timestamps.push_back(seq.timestamp(f));
    out.trajectory.poses.push_back(out.result.poses[f].inverse());
  }
  return out;
}

void write_odometry_outputs(const OdometryOutput& out, const Sequence& seq, const RunConfig& config,
                            const fs::path& dir) {
  save_tum(dir / "trajectory.tum", out.trajectory);
  for (std::size_t f = 0; f < out.result.depths.size(); ++f)
    save_dmap(dir / "depth" / (frame_stem(f) + ".dmap"), out.result.depths[f]);
  MetricReport report;
  if (seq.groundtruth) {
    const double ate = ate_rmse(out.trajectory, *seq.groundtruth, config.scale_align);
    report.lines.push_back({"ate", 0, ate, std::nan(""), std::nan("")});
  }
  report.lines.push_back(
      {"dba_steps", 0, static_cast<double>(out.result.accepted_steps), std::nan(""), std::nan("")});
  write_report(report, dir, "odometry_report");
}

AttentionGate default_gate(const Sequence&, const RunConfig& config) {
  return AttentionGate::seeded(3, config.fusion_kernel, config.seed);
}

std::vector<std::vector<FeatureMap>> run_fusion_stage(const Sequence& seq, const RunConfig& config,
                                                      const AttentionGate& gate) {
  config.validate();
  gate.validate();
  if (gate.channels != 3) throw std::invalid_argument("fusion over RGB features needs a 3-channel gate");
  std::vector<std::vector<FeatureMap>> fused;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const FrameState& prev = seq.frames[t - 1];
    const WarpedFeatures warped = warp_forward(rgb_features(prev.rgb), prev.flow_to_next, prev.depth);
    const FeaturePyramid cur_pyr = build_pyramid(rgb_features(seq.frames[t].rgb), config.pyramid_levels);
    const FeaturePyramid warp_pyr = build_pyramid(warped.map, config.pyramid_levels, warped.coverage);
    fused.push_back(fuse_pyramid(cur_pyr, warp_pyr, gate));
  }
  return fused;
}

void write_fusion_outputs(const std::vector<std::vector<FeatureMap>>& fused, const fs::path& dir) {
  for (std::size_t i = 0; i < fused.size(); ++i)
    for (std::size_t k = 0; k < fused[i].size(); ++k)
      save_feat(dir / "fused" / (frame_stem(i + 1) + "_l" + std::to_string(k) + ".feat"), fused[i][k]);
}

TrackOutput run_tracking_stage(const Sequence& seq, const RunConfig& config) {
  config.validate();
  TrackOutput out;
  if (seq.frames.empty()) return out;
  InstanceIdAllocator ids;
  out.maps.push_back(assign_fresh_ids(seq.frames[0].panoptic, ids));
  PostMatchOptions opts;
  opts.iou_floor = config.iou_floor;
  opts.use_warped_previous = config.use_warped_previous;
  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const FrameState& prev = seq.frames[t - 1];
    const PanopticMap warped = warp_forward(out.maps.back(), prev.flow_to_next, prev.depth).map;
    opts.frame = static_cast<int>(t);
    PostMatchResult r = post_match(out.maps.back(), seq.frames[t].panoptic, warped, ids, opts);
    out.maps.back() = std::move(r.previous);
    out.maps.push_back(std::move(r.current));
    out.report.insert(out.report.end(), r.report.begin(), r.report.end());
  }
  return out;
}

void write_tracking_outputs(const TrackOutput& out, const fs::path& dir) {
  for (std::size_t f = 0; f < out.maps.size(); ++f) save_pmap(dir / "panoptic" / (frame_stem(f) + ".pmap"), out.maps[f]);
  write_text_atomic(dir / "match_report.txt", format_match_report(out.report));
}

std::vector<std::vector<std::uint8_t>> dynamic_exclusion(const Sequence& seq, double tau) {
  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& f : seq.frames) {
    std::vector<std::uint8_t> m(seq.camera.pixel_count(), 0);
    if (f.dynamic.size() > 0) {
      const RefinedDynamicMask r = refine_dynamic_mask(f.dynamic, f.panoptic, tau);
      for (std::size_t p = 0; p < m.size(); ++p) m[p] = r.value[p] > 0.5 ? 1 : 0;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

RenderOutput run_render_stage(const Sequence& seq, const Trajectory& trajectory, const RunConfig& config,
                              std::size_t hard_count) {
  config.validate();
  if (trajectory.size() != seq.frames.size())
    throw std::invalid_argument("render: trajectory length does not match the sequence");
  const auto dynamic = dynamic_exclusion(seq, config.tau);
  std::vector<RenderFrame> frames;
  std::vector<Pose> views;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    frames.push_back({&seq.frames[f].rgb, &seq.frames[f].depth, dynamic[f], {}});
    views.push_back(trajectory.poses[f].inverse());
  }
  RenderOutput out;
  out.cloud = accumulate_points(frames, views, seq.camera, config.stride);
  std::vector<SampleScore> scores;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    Composite img = composite(rasterize(out.cloud, views[f], seq.camera, config.pyramid_levels));
    std::vector<std::uint8_t> mask(img.coverage.size());
    bool any = false;
    for (std::size_t p = 0; p < mask.size(); ++p) {
      mask[p] = img.coverage[p] && !dynamic[f][p];
      any = any || mask[p];
    }
    out.psnr.push_back(any ? psnr(img.image, seq.frames[f].rgb, 255.0, mask) : 0.0);
    scores.push_back({static_cast<std::uint32_t>(f), any ? image_quality_score(img.image, seq.frames[f].rgb, mask)
                                                          : 255.0});
    out.images.push_back(std::move(img));
  }
  out.hard = select_hard_samples(scores, std::min(hard_count, scores.size()));
  return out;
}

void write_render_outputs(const RenderOutput& out, const fs::path& dir) {
  save_ply(dir / "cloud.ply", out.cloud);
  for (std::size_t f = 0; f < out.images.size(); ++f)
    save_ppm(dir / "render" / (frame_stem(f) + ".ppm"), out.images[f].image);
  MetricReport report;
  for (std::size_t f = 0; f < out.psnr.size(); ++f)
    report.lines.push_back({"psnr", static_cast<int>(f), out.psnr[f], std::nan(""), std::nan("")});
  for (std::size_t i = 0; i < out.hard.size(); ++i)
    report.lines.push_back({"hard_sample", static_cast<int>(i), static_cast<double>(out.hard[i]), std::nan(""),
                            std::nan("")});
  write_report(report, dir, "render_report");
}

std::string MetricReport::text() const {
  std::string out;
  for (const auto& l : lines)
    out += l.metric + " " + std::to_string(l.k) + " " + format_metric_value(l.total) + " " +
           format_metric_value(l.things) + " " + format_metric_value(l.stuff) + "\n";
  return out;
}

std::string MetricReport::key_values() const {
  std::string out;
  for (const auto& l : lines) {
    const std::string prefix = l.metric + ".k" + std::to_string(l.k) + ".";
    out += prefix + "total=" + format_metric_value(l.total) + "\n";
    out += prefix + "things=" + format_metric_value(l.things) + "\n";
    out += prefix + "stuff=" + format_metric_value(l.stuff) + "\n";
  }
  return out;
}

MetricReport vpq_report(const std::vector<PanopticMap>& pred, const std::vector<PanopticMap>& gt,
                        const std::vector<int>& ks) {
  if (ks.empty()) throw std::invalid_argument("vpq_report: no window sizes");
  MetricReport report;
  double total = 0.0, things = 0.0, stuff = 0.0;
  for (int k : ks) {
    const VpqResult r = vpq(pred, gt, k);
    report.lines.push_back({"vpq", k, r.total, r.things, r.stuff});
    total += r.total;
    things += r.things;
    stuff += r.stuff;
  }
  const double n = static_cast<double>(ks.size());
  report.lines.push_back({"vpq_mean", static_cast<int>(ks.size()), total / n, things / n, stuff / n});
  return report;
}

void write_report(const MetricReport& report, const fs::path& dir, const std::string& stem) {
  write_text_atomic(dir / (stem + ".txt"), report.text());
  write_text_atomic(dir / (stem + ".kv"), report.key_values());
}

void run_pipeline(const Sequence& seq, const RunConfig& config, int threads, const fs::path& dir) {
  const OdometryOutput odo = run_odometry_stage(seq, config, threads);
  write_odometry_outputs(odo, seq, config, dir);
  const TrackOutput track = run_tracking_stage(seq, config);
  write_tracking_outputs(track, dir);
  write_fusion_outputs(run_fusion_stage(seq, config, default_gate(seq, config)), dir);
  write_render_outputs(run_render_stage(seq, odo.trajectory, config), dir);

  std::vector<PanopticMap> gt;
  for (const auto& f : seq.frames) gt.push_back(f.panoptic);
  std::vector<int> ks;
  for (int k : {0, 5, 10, 15})
    if (static_cast<std::size_t>(k) < gt.size()) ks.push_back(k);
  write_report(vpq_report(track.maps, gt, ks), dir, "vpq_report");
}

}  // namespace sports
