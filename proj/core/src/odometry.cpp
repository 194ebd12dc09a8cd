#include "sports/odometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sports {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool sample_flow(const FlowField& flow, const Vector2& at, double max_jump, const PanopticMap* labels,
                 std::uint16_t cls, Vector2& out) {
  const double x = at.x();
  const double y = at.y();
  if (!(x >= 0.0 && y >= 0.0 && x <= flow.width - 1 && y <= flow.height - 1)) return false;
  const int x0 = std::min(static_cast<int>(std::floor(x)), flow.width - 2 < 0 ? 0 : flow.width - 2);
  const int y0 = std::min(static_cast<int>(std::floor(y)), flow.height - 2 < 0 ? 0 : flow.height - 2);
  const int x1 = std::min(x0 + 1, flow.width - 1);
  const int y1 = std::min(y0 + 1, flow.height - 1);
  const std::size_t idx[4] = {static_cast<std::size_t>(y0) * flow.width + x0,
                              static_cast<std::size_t>(y0) * flow.width + x1,
                              static_cast<std::size_t>(y1) * flow.width + x0,
                              static_cast<std::size_t>(y1) * flow.width + x1};
  for (auto k : idx) {
    if (!flow.valid[k]) return false;
    if (labels && labels->semantic[k] != cls) return false;
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if ((flow.flow[idx[a]] - flow.flow[idx[b]]).cwiseAbs().maxCoeff() > max_jump) return false;
  const double fx = x - x0;
  const double fy = y - y0;
  out = (1 - fx) * (1 - fy) * flow.flow[idx[0]] + fx * (1 - fy) * flow.flow[idx[1]] +
        (1 - fx) * fy * flow.flow[idx[2]] + fx * fy * flow.flow[idx[3]];
  return true;
}

RefinedDynamicMask refined_for_frame(const FrameGraph& graph, int frame, double tau) {
  for (const auto& e : graph.edges)
    if (e.i == frame) return refine_dynamic_mask(e.dynamic, graph.frames[frame].panoptic, tau);
  const auto& f = graph.frames[frame];
  return refine_dynamic_mask(DynamicMask(f.depth.width, f.depth.height), f.panoptic, tau);
}

void apply_weights(FrameGraph& graph, double eta, double tau, bool refine) {
  for (auto& e : graph.edges) {
    RefinedDynamicMask mdp;
    if (refine) {
      mdp = refine_dynamic_mask(e.dynamic, graph.frames[e.i].panoptic, tau);
    } else {
      mdp.width = e.dynamic.width;
      mdp.height = e.dynamic.height;
      mdp.value.resize(e.dynamic.size());
      for (std::size_t p = 0; p < e.dynamic.size(); ++p) mdp.value[p] = e.dynamic.probability(p);
    }
    e.weight = panoptic_confidence(e.raw_confidence, mdp, eta);
  }
}

int optimise(FrameGraph& graph, const CameraModel& cam, int iterations, bool optimize_poses, int threads,
             double& final_cost) {
  DbaOptions opts;
  opts.optimize_poses = optimize_poses;
  opts.threads = threads;
  int accepted = 0;
  final_cost = dba_cost(graph, cam);
  while (accepted < iterations) {
    const DbaStepResult step = dba_step(graph, cam, opts);
    final_cost = step.cost;
    if (step.status != DbaStatus::kAccepted) break;
    ++accepted;
    opts.damping = std::max(step.damping * 0.1, kInitialDamping);
    if (step.cost_before - step.cost < 1e-8 * step.cost_before) break;
  }
  return accepted;
}

}  // namespace

DynamicMask::DynamicMask(int w, int h)
    : width(w), height(h), scores(2 * static_cast<std::size_t>(w) * h, 0.0) {}

double DynamicMask::probability(std::size_t idx) const {
  return logistic(scores[2 * idx + 1] - scores[2 * idx]);
}

ConfidenceMap::ConfidenceMap(int w, int h, double fill)
    : width(w), height(h), values(2 * static_cast<std::size_t>(w) * h, fill) {}

RefinedDynamicMask refine_dynamic_mask(const DynamicMask& raw, const PanopticMap& pan, double tau) {
  if (raw.width != pan.width || raw.height != pan.height)
    throw std::invalid_argument("refine_dynamic_mask: mask and panoptic map differ in size");
  const std::size_t n = raw.size();
  std::map<std::uint32_t, std::pair<double, std::size_t>> votes;
  for (std::size_t p = 0; p < n; ++p) {
    if (pan.semantic[p] == 0 || pan.instance[p] == 0 || pan.unknown[p]) continue;
    auto& v = votes[pan.code(p)];
    v.first += raw.probability(p);
    ++v.second;
  }
  RefinedDynamicMask out{raw.width, raw.height, std::vector<double>(n, 0.0)};
  for (std::size_t p = 0; p < n; ++p) {
    if (pan.unknown[p]) {
      out.value[p] = 1.0;
    } else if (pan.semantic[p] == 0) {
      out.value[p] = raw.probability(p) > tau ? 1.0 : 0.0;
    } else if (pan.instance[p] != 0) {
      const auto& v = votes.at(pan.code(p));
      out.value[p] = v.first / static_cast<double>(v.second) > tau ? 1.0 : 0.0;
    }
  }
  return out;
}

ConfidenceMap panoptic_confidence(const ConfidenceMap& w, const RefinedDynamicMask& mdp, double eta) {
  if (w.width != mdp.width || w.height != mdp.height)
    throw std::invalid_argument("panoptic_confidence: confidence and mask differ in size");
  if (!(eta >= 0.0)) throw std::invalid_argument("panoptic_confidence: eta must be non-negative");
  ConfidenceMap out(w.width, w.height);
  for (std::size_t p = 0; p < w.size(); ++p) {
    const double boost = (1.0 - mdp.value[p]) * eta;
    out.values[2 * p] = logistic(w.values[2 * p] + boost);
    out.values[2 * p + 1] = logistic(w.values[2 * p + 1] + boost);
  }
  return out;
}

void compose_flow_targets(std::span<const FlowField> flows, int i, int j, std::vector<Vector2>& target,
                          std::vector<std::uint8_t>& valid, double max_flow_jump,
                          std::span<const PanopticMap> labels) {
  if (!(i < j) || j > static_cast<int>(flows.size()))
    throw std::invalid_argument("compose_flow_targets: need i < j with flows for frames i .. j-1");
  if (!labels.empty() && labels.size() < static_cast<std::size_t>(j))
    throw std::invalid_argument("compose_flow_targets: need a panoptic map for every flow frame");
  const FlowField& first = flows[i];
  const std::size_t n = first.size();
  target.assign(n, Vector2::Zero());
  valid.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    if (!first.valid[p]) continue;
    Vector2 u(static_cast<double>(p % first.width), static_cast<double>(p / first.width));
    u += first.flow[p];
    bool ok = u.allFinite();
    const std::uint16_t cls = labels.empty() ? 0 : labels[i].semantic[p];
    for (int k = i + 1; k < j && ok; ++k) {
      Vector2 f;
      ok = sample_flow(flows[k], u, max_flow_jump, labels.empty() ? nullptr : &labels[k], cls, f);
      if (ok) u += f;
    }
    if (!ok) continue;
    target[p] = u;
    valid[p] = 1;
  }
}

FrameGraph build_frame_graph(std::span<const OdometryFrame> frames, const CameraModel& cam, int window,
                             double base_confidence) {
  if (window < 1) throw std::invalid_argument("build_frame_graph: window must be >= 1");
  FrameGraph graph;
  const int n = static_cast<int>(frames.size());
  std::vector<FlowField> flows;
  for (int f = 0; f < n; ++f) {
    const auto& in = frames[f];
    if (!in.depth.same_shape(cam.width, cam.height))
      throw std::invalid_argument("build_frame_graph: depth map does not match camera");
    PanopticMap pan = in.panoptic.size() ? in.panoptic : PanopticMap(cam.width, cam.height);
    graph.frames.push_back({in.initial_pose, in.depth, std::move(pan)});
    if (f + 1 < n) {
      if (in.flow_to_next.width != cam.width || in.flow_to_next.height != cam.height)
        throw std::invalid_argument("build_frame_graph: missing or mis-sized flow for frame " + std::to_string(f));
      flows.push_back(in.flow_to_next);
    }
  }
  std::vector<PanopticMap> labels;
  for (const auto& f : graph.frames) labels.push_back(f.panoptic);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j <= std::min(n - 1, i + window); ++j) {
      GraphEdge e;
      e.i = i;
      e.j = j;
      compose_flow_targets(flows, i, j, e.target, e.target_valid, 0.5, labels);
      const PanopticMap& pan = graph.frames[i].panoptic;
      for (std::size_t p = 0; p < e.target_valid.size(); ++p)
        if (pan.unknown[p]) e.target_valid[p] = 0;
      e.raw_confidence = ConfidenceMap(cam.width, cam.height, base_confidence);
      e.dynamic = frames[i].dynamic.size() == cam.pixel_count() ? frames[i].dynamic
                                                                 : DynamicMask(cam.width, cam.height);
      e.weight = ConfidenceMap(cam.width, cam.height, logistic(base_confidence));
      graph.edges.push_back(std::move(e));
    }
  }
  return graph;
}

void update_dynamic_masks(FrameGraph& graph, const CameraModel& cam, double residual_sigmas) {
  if (!(residual_sigmas > 0.0)) throw std::invalid_argument("update_dynamic_masks: sigma count must be positive");
  for (auto& e : graph.edges) {
    const GraphFrame& fi = graph.frames[e.i];
    const Pose rel = pose_relative(fi.pose, graph.frames[e.j].pose);
    std::vector<double> residual(fi.depth.size(), -1.0);
    std::vector<double> observed;
    for (std::size_t p = 0; p < fi.depth.size(); ++p) {
      if (!fi.depth.is_valid(p) || !e.target_valid[p]) continue;
      const Vector2 u(static_cast<double>(p % cam.width), static_cast<double>(p / cam.width));
      const auto uv = project(cam, rel * backproject(cam, u, fi.depth.depth[p]));
      if (!uv) continue;
      residual[p] = (*uv - e.target[p]).norm();
      observed.push_back(residual[p]);
    }
    if (observed.empty()) continue;
    // Robust scale: 1.4826 * median is the standard deviation under Gaussian noise.
    const auto mid = observed.begin() + static_cast<std::ptrdiff_t>(observed.size() / 2);
    std::nth_element(observed.begin(), mid, observed.end());
    const double threshold = std::max(residual_sigmas * 1.4826 * *mid, 1e-9);

    FrameIncrement inc;
    inc.mask.assign(e.dynamic.scores.size(), 0.0);
    for (std::size_t p = 0; p < residual.size(); ++p)
      if (residual[p] >= 0.0) inc.mask[2 * p + 1] = std::clamp(residual[p] / threshold - 1.0, -2.0, 2.0);
    FrameVariables vars{fi.pose, fi.depth, e.dynamic.scores};
    e.dynamic.scores = retract_state(vars, inc).mask;
  }
}

OdometryResult run_odometry(std::span<const OdometryFrame> frames, const CameraModel& cam,
                            const OdometryOptions& options) {
  if (frames.size() < 2) throw std::invalid_argument("run_odometry: need at least two frames");
  if (options.panoptic_rounds < 1 || options.iterations < 0)
    throw std::invalid_argument("run_odometry: invalid iteration counts");
  cam.validate();
  FrameGraph graph = build_frame_graph(frames, cam, options.window, options.base_confidence);

  OdometryResult result;
  for (int round = 0; round < options.panoptic_rounds; ++round) {
    apply_weights(graph, options.eta, options.tau, true);
    double cost = 0.0;
    result.accepted_steps += optimise(graph, cam, options.iterations, true, options.threads, cost);
    result.round_costs.push_back(cost);
    if (round + 1 < options.panoptic_rounds)
      update_dynamic_masks(graph, cam, options.dynamic_residual_sigmas);
  }

  const int n = static_cast<int>(graph.frames.size());
  for (int f = 0; f < n; ++f) {
    result.poses.push_back(graph.frames[f].pose);
    result.dynamic.push_back(refined_for_frame(graph, f, options.tau));
  }

  // D': refined depths with dynamic pixels removed.
  for (int f = 0; f < n; ++f) {
    DepthMap refined = graph.frames[f].depth;
    const RefinedDynamicMask& mdp = result.dynamic[f];
    for (std::size_t p = 0; p < refined.size(); ++p)
      if (mdp.value[p] > 0.5) refined.invalidate(p);
    result.depths.push_back(std::move(refined));
  }
  if (!options.propagate_depth) return result;

  // D'': same graph, unrefined per-pixel dynamic probabilities, depths only.
  FrameGraph dense = graph;
  apply_weights(dense, options.eta, options.tau, false);
  double dense_cost = 0.0;
  optimise(dense, cam, options.iterations, false, options.threads, dense_cost);
  for (int f = 0; f < n; ++f) result.depths[f] = propagate_depth(result.depths[f], dense.frames[f].depth);
  return result;
}

DepthMap propagate_depth(const DepthMap& refined, const DepthMap& dense) {
  if (!refined.same_shape(dense.width, dense.height))
    throw std::invalid_argument("propagate_depth: depth maps differ in size");
  DepthMap out = refined;
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (refined.is_valid(p) || !dense.is_valid(p)) continue;
    out.depth[p] = dense.depth[p];
    out.valid[p] = 1;
  }
  return out;
}

}  // namespace sports
