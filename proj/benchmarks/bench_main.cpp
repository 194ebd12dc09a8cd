#include <benchmark/benchmark.h>

#include <random>

#include "sports/metrics.hpp"
#include "sports/odometry.hpp"
#include "sports/rendering.hpp"
#include "sports/synth.hpp"
#include "sports/warpfusion.hpp"

namespace {

using namespace sports;

SynthScene scene(int size, int frames) {
  SynthConfig sc;
  sc.frames = frames;
  sc.width = size;
  sc.height = size;
  return synth_generate(sc);
}

FrameGraph perturbed_graph(const SynthScene& s) {
  std::vector<OdometryFrame> frames;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 0.01);
  for (std::size_t f = 0; f < s.sequence.frames.size(); ++f) {
    const FrameState& fr = s.sequence.frames[f];
    Tangent d = Tangent::Zero();
    if (f > 0)
      for (int k = 0; k < 6; ++k) d[k] = nd(rng);
    frames.push_back({se3_exp(d) * s.poses[f], fr.depth, fr.panoptic, fr.flow_to_next, fr.dynamic});
  }
  return build_frame_graph(frames, s.sequence.camera, kDefaultWindow, kDefaultBaseConfidence);
}

void BM_DbaStep(benchmark::State& state) {
  const SynthScene s = scene(static_cast<int>(state.range(0)), 6);
  const FrameGraph graph = perturbed_graph(s);
  DbaOptions opts;
  opts.threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    state.PauseTiming();
    FrameGraph g = graph;
    state.ResumeTiming();
    benchmark::DoNotOptimize(dba_step(g, s.sequence.camera, opts));
  }
}
BENCHMARK(BM_DbaStep)->Args({32, 1})->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
  const SynthScene s = scene(static_cast<int>(state.range(0)), 4);
  std::vector<RenderFrame> frames;
  for (const auto& fr : s.sequence.frames) frames.push_back({&fr.rgb, &fr.depth, {}, {}});
  const DescriptorCloud cloud = accumulate_points(frames, s.poses, s.sequence.camera, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(cloud, s.poses[1], s.sequence.camera, 4));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cloud.points.size()));
}
BENCHMARK(BM_Rasterize)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ForwardWarp(benchmark::State& state) {
  const SynthScene s = scene(static_cast<int>(state.range(0)), 2);
  const FrameState& fr = s.sequence.frames[0];
  FeatureMap feat(fr.rgb.width, fr.rgb.height, 8, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(warp_forward(feat, fr.flow_to_next, fr.depth));
}
BENCHMARK(BM_ForwardWarp)->Arg(64)->Arg(256);

void BM_AgFuse(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const AttentionGate gate = AttentionGate::seeded(8, 3, 1);
  const FeatureMap a(size, size, 8, 0.3), b(size, size, 8, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(ag_fuse(a, b, gate));
}
BENCHMARK(BM_AgFuse)->Arg(32)->Arg(64);

void BM_Vpq(benchmark::State& state) {
  const SynthScene s = scene(64, 20);
  std::vector<PanopticMap> gt;
  for (const auto& fr : s.sequence.frames) gt.push_back(fr.panoptic);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vpq(gt, gt, k));
}
BENCHMARK(BM_Vpq)->Arg(0)->Arg(5)->Arg(15);

}  // namespace

BENCHMARK_MAIN();
