#include "sports/warpfusion.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sports {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void require_same_grid(const FlowField& flow, int w, int h, const char* what) {
  if (flow.width != w || flow.height != h)
    throw std::invalid_argument(std::string(what) + ": flow size does not match input");
}

std::vector<double> pooled_means(const FeatureMap& m) {
  std::vector<double> mean(m.channels, 0.0);
  const std::size_t n = m.pixel_count();
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < m.channels; ++c) mean[c] += m.at(p, c);
  for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

// out += conv(in, kernel) where `in` has 2C channels and `out` has C channels.
void convolve_accumulate(const FeatureMap& in, const AttentionGate& g, std::span<const double> kernel,
                         FeatureMap& out) {
  const int n = g.kernel_size;
  const int half = n / 2;
  const int cin_count = 2 * g.channels;
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      double* dst = &out.data[(static_cast<std::size_t>(r) * in.width + c) * g.channels];
      for (int ky = 0; ky < n; ++ky) {
        const int sr = r + ky - half;
        if (sr < 0 || sr >= in.height) continue;
        for (int kx = 0; kx < n; ++kx) {
          const int sc = c + kx - half;
          if (sc < 0 || sc >= in.width) continue;
          const double* src = &in.data[(static_cast<std::size_t>(sr) * in.width + sc) * cin_count];
          for (int ci = 0; ci < cin_count; ++ci) {
            const double v = src[ci];
            if (v == 0.0) continue;
            const double* k = &kernel[g.kernel_index(ky, kx, ci, 0)];
            for (int co = 0; co < g.channels; ++co) dst[co] += v * k[co];
          }
        }
      }
    }
  }
}

FeatureMap scale_channels(const FeatureMap& m, const std::vector<double>& w) {
  FeatureMap out = m;
  const std::size_t n = m.pixel_count();
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < m.channels; ++c) out.at(p, c) *= w[c];
  return out;
}

void check_fuse_inputs(const FeatureMap& current, const FeatureMap& warped, const AttentionGate& gate) {
  gate.validate();
  if (!current.same_shape(warped))
    throw std::invalid_argument("ag_fuse: current and warped feature maps differ in shape");
  if (current.channels != gate.channels)
    throw std::invalid_argument("ag_fuse: channel count does not match gate");
}

}  // namespace

FlowField::FlowField(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("FlowField: negative size");
  flow.assign(static_cast<std::size_t>(w) * h, Vector2::Zero());
  valid.assign(static_cast<std::size_t>(w) * h, 0);
}

FeatureMap::FeatureMap(int w, int h, int c, double fill) : width(w), height(h), channels(c) {
  if (w < 0 || h < 0 || c < 1) throw std::invalid_argument("FeatureMap: invalid shape");
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

std::vector<std::uint8_t> WarpIndex::coverage() const {
  std::vector<std::uint8_t> cov(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) cov[i] = source[i] >= 0 ? 1 : 0;
  return cov;
}

WarpIndex compute_warp(const FlowField& flow, const DepthMap& depth, WarpMode mode) {
  require_same_grid(flow, depth.width, depth.height, "warp_forward");
  const int w = flow.width;
  const int h = flow.height;
  WarpIndex out{w, h, std::vector<std::int32_t>(flow.size(), -1)};

  if (mode == WarpMode::kBackwardSample) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r) * w + c;
        if (!flow.valid[idx]) continue;
        const int tc = round_half_up(c + flow.flow[idx].x());
        const int tr = round_half_up(r + flow.flow[idx].y());
        if (tc < 0 || tc >= w || tr < 0 || tr >= h) continue;
        out.source[idx] = tr * w + tc;
      }
    }
    return out;
  }

  // Per-target reduction equivalent to the sequential splat order: the
  // survivor is the minimum-depth source, ties going to the larger index.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * w + c;
      if (!flow.valid[idx] || !depth.is_valid(idx)) continue;
      const Vector2& f = flow.flow[idx];
      if (!f.allFinite()) continue;
      const int tc = round_half_up(c + f.x());
      const int tr = round_half_up(r + f.y());
      if (tc < 0 || tc >= w || tr < 0 || tr >= h) continue;
      auto& slot = out.source[static_cast<std::size_t>(tr) * w + tc];
      if (slot < 0 || depth.depth[idx] <= depth.depth[static_cast<std::size_t>(slot)])
        slot = static_cast<std::int32_t>(idx);
    }
  }
  return out;
}

WarpedFeatures warp_forward(const FeatureMap& src, const FlowField& flow, const DepthMap& depth,
                            WarpMode mode) {
  if (src.width != flow.width || src.height != flow.height)
    throw std::invalid_argument("warp_forward: feature map size does not match flow");
  const WarpIndex index = compute_warp(flow, depth, mode);
  WarpedFeatures out{FeatureMap(src.width, src.height, src.channels), index.coverage()};
  for (std::size_t t = 0; t < index.source.size(); ++t) {
    if (index.source[t] < 0) continue;
    const auto s = static_cast<std::size_t>(index.source[t]);
    for (int c = 0; c < src.channels; ++c) out.map.at(t, c) = src.at(s, c);
  }
  return out;
}

WarpedPanoptic warp_forward(const PanopticMap& src, const FlowField& flow, const DepthMap& depth,
                            WarpMode mode) {
  if (src.width != flow.width || src.height != flow.height)
    throw std::invalid_argument("warp_forward: panoptic map size does not match flow");
  const WarpIndex index = compute_warp(flow, depth, mode);
  WarpedPanoptic out{PanopticMap(src.width, src.height), index.coverage()};
  for (std::size_t t = 0; t < index.source.size(); ++t) {
    if (index.source[t] < 0) continue;
    const auto s = static_cast<std::size_t>(index.source[t]);
    out.map.semantic[t] = src.semantic[s];
    out.map.instance[t] = src.instance[s];
    out.map.unknown[t] = src.unknown[s];
  }
  return out;
}

AttentionGate AttentionGate::zeros(int channels, int kernel_size) {
  AttentionGate g;
  g.channels = channels;
  g.kernel_size = kernel_size;
  g.scale.assign(2 * channels, 0.0);
  g.bias.assign(2 * channels, 0.0);
  g.kernel.assign(static_cast<std::size_t>(kernel_size) * kernel_size * 2 * channels * channels, 0.0);
  g.validate();
  return g;
}

AttentionGate AttentionGate::seeded(int channels, int kernel_size, std::uint64_t seed) {
  AttentionGate g = zeros(channels, kernel_size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gate_dist(0.0, 0.5);
  for (auto& v : g.scale) v = gate_dist(rng);
  for (auto& v : g.bias) v = gate_dist(rng);
  std::normal_distribution<double> kernel_dist(
      0.0, 1.0 / std::sqrt(static_cast<double>(kernel_size * kernel_size * 2 * channels)));
  for (auto& v : g.kernel) v = kernel_dist(rng);
  return g;
}

void AttentionGate::validate() const {
  if (channels < 1) throw std::invalid_argument("AttentionGate: channels must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("AttentionGate: kernel size must be odd");
  const auto c2 = static_cast<std::size_t>(2 * channels);
  if (scale.size() != c2 || bias.size() != c2)
    throw std::invalid_argument("AttentionGate: gate parameter count must be 2C");
  if (kernel.size() != static_cast<std::size_t>(kernel_size) * kernel_size * c2 * channels)
    throw std::invalid_argument("AttentionGate: kernel must hold n*n*2C*C entries");
  for (double v : kernel)
    if (!std::isfinite(v)) throw std::invalid_argument("AttentionGate: non-finite kernel entry");
}

int default_fusion_kernel(int width, int height) {
  return static_cast<long long>(width) * height <= 1242LL * 375LL ? 3 : 7;
}

FeatureMap concat_channels(const FeatureMap& warped, const FeatureMap& current) {
  if (warped.width != current.width || warped.height != current.height)
    throw std::invalid_argument("concat_channels: spatial size mismatch");
  FeatureMap out(warped.width, warped.height, warped.channels + current.channels);
  for (std::size_t p = 0; p < warped.pixel_count(); ++p) {
    for (int c = 0; c < warped.channels; ++c) out.at(p, c) = warped.at(p, c);
    for (int c = 0; c < current.channels; ++c) out.at(p, warped.channels + c) = current.at(p, c);
  }
  return out;
}

std::vector<double> channel_attention(const FeatureMap& concat, const AttentionGate& gate) {
  if (concat.channels != 2 * gate.channels)
    throw std::invalid_argument("channel_attention: input must have 2C channels");
  const std::vector<double> mean = pooled_means(concat);
  std::vector<double> a(mean.size());
  for (std::size_t c = 0; c < mean.size(); ++c) a[c] = logistic(gate.scale[c] * mean[c] + gate.bias[c]);
  return a;
}

FeatureMap ag_fuse(const FeatureMap& current, const FeatureMap& warped, const AttentionGate& gate,
                   std::optional<std::span<const double>> frozen_weights) {
  check_fuse_inputs(current, warped, gate);
  const FeatureMap x = concat_channels(warped, current);
  std::vector<double> a;
  if (frozen_weights) {
    if (frozen_weights->size() != static_cast<std::size_t>(2 * gate.channels))
      throw std::invalid_argument("ag_fuse: frozen weights must have length 2C");
    a.assign(frozen_weights->begin(), frozen_weights->end());
  } else {
    a = channel_attention(x, gate);
  }
  FeatureMap out(current.width, current.height, gate.channels);
  convolve_accumulate(scale_channels(x, a), gate, gate.kernel, out);
  return out;
}

FeatureMap ag_fuse_jvp(const FeatureMap& current, const FeatureMap& warped, const AttentionGate& gate,
                       const FusionDirection& dir) {
  check_fuse_inputs(current, warped, gate);
  const int c2 = 2 * gate.channels;
  auto or_zero = [&](const FeatureMap& d) {
    if (d.channels == 0) return FeatureMap(current.width, current.height, current.channels);
    if (!d.same_shape(current)) throw std::invalid_argument("ag_fuse_jvp: feature direction shape mismatch");
    return d;
  };
  auto check_len = [](const std::vector<double>& v, std::size_t n, const char* what) {
    if (!v.empty() && v.size() != n) throw std::invalid_argument(std::string("ag_fuse_jvp: ") + what);
  };
  check_len(dir.d_scale, c2, "scale direction length");
  check_len(dir.d_bias, c2, "bias direction length");
  check_len(dir.d_kernel, gate.kernel.size(), "kernel direction length");

  const FeatureMap x = concat_channels(warped, current);
  const FeatureMap dx = concat_channels(or_zero(dir.d_warped), or_zero(dir.d_current));
  const std::vector<double> mean = pooled_means(x);
  const std::vector<double> dmean = pooled_means(dx);

  std::vector<double> a(c2);
  std::vector<double> da(c2);
  for (int c = 0; c < c2; ++c) {
    a[c] = logistic(gate.scale[c] * mean[c] + gate.bias[c]);
    const double ds = dir.d_scale.empty() ? 0.0 : dir.d_scale[c];
    const double db = dir.d_bias.empty() ? 0.0 : dir.d_bias[c];
    da[c] = a[c] * (1.0 - a[c]) * (ds * mean[c] + gate.scale[c] * dmean[c] + db);
  }

  // dY = da * X + a * dX
  FeatureMap y = scale_channels(x, a);
  FeatureMap dy = scale_channels(x, da);
  const FeatureMap a_dx = scale_channels(dx, a);
  for (std::size_t i = 0; i < dy.data.size(); ++i) dy.data[i] += a_dx.data[i];

  FeatureMap out(current.width, current.height, gate.channels);
  convolve_accumulate(dy, gate, gate.kernel, out);
  if (!dir.d_kernel.empty()) convolve_accumulate(y, gate, dir.d_kernel, out);
  return out;
}

FusionModel FusionModel::seeded(int branches, int channels, int kernel_size, std::uint64_t seed) {
  FusionModel m;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(branches));
  std::mt19937_64 rng(seed);
  for (auto& s : seeds) s = rng();
  for (auto s : seeds) m.branches.push_back(AttentionGate::seeded(channels, kernel_size, s));
  return m;
}

std::vector<FeatureMap> FusionModel::fuse(const FeatureMap& current, const FeatureMap& warped) const {
  std::vector<FeatureMap> out;
  out.reserve(branches.size());
  for (const auto& g : branches) out.push_back(ag_fuse(current, warped, g));
  return out;
}

FeaturePyramid build_pyramid(const FeatureMap& base, int levels, std::span<const std::uint8_t> valid) {
  if (levels < 1) throw std::invalid_argument("build_pyramid: level count must be >= 1");
  if (!valid.empty() && valid.size() != base.pixel_count())
    throw std::invalid_argument("build_pyramid: validity mask size mismatch");
  FeaturePyramid pyr;
  pyr.levels.push_back(base);
  pyr.valid.emplace_back(valid.empty() ? std::vector<std::uint8_t>(base.pixel_count(), 1)
                                       : std::vector<std::uint8_t>(valid.begin(), valid.end()));
  for (int k = 1; k < levels; ++k) {
    const FeatureMap& prev = pyr.levels.back();
    const std::vector<std::uint8_t>& pv = pyr.valid.back();
    const int w = (prev.width + 1) / 2;
    const int h = (prev.height + 1) / 2;
    FeatureMap next(w, h, base.channels);
    std::vector<std::uint8_t> nv(static_cast<std::size_t>(w) * h, 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t dst = static_cast<std::size_t>(r) * w + c;
        int count = 0;
        for (int dr = 0; dr < 2; ++dr) {
          for (int dc = 0; dc < 2; ++dc) {
            const int sr = 2 * r + dr;
            const int sc = 2 * c + dc;
            if (sr >= prev.height || sc >= prev.width) continue;
            const std::size_t src = static_cast<std::size_t>(sr) * prev.width + sc;
            if (!pv[src]) continue;
            ++count;
            for (int ch = 0; ch < base.channels; ++ch) next.at(dst, ch) += prev.at(src, ch);
          }
        }
        if (count > 0) {
          nv[dst] = 1;
          for (int ch = 0; ch < base.channels; ++ch) next.at(dst, ch) /= count;
        }
      }
    }
    pyr.levels.push_back(std::move(next));
    pyr.valid.push_back(std::move(nv));
  }
  return pyr;
}

std::vector<FeatureMap> fuse_pyramid(const FeaturePyramid& current, const FeaturePyramid& warped,
                                     const AttentionGate& gate) {
  if (current.levels.size() != warped.levels.size())
    throw std::invalid_argument("fuse_pyramid: pyramid depth mismatch");
  std::vector<FeatureMap> out;
  for (std::size_t k = 0; k < current.levels.size(); ++k)
    out.push_back(ag_fuse(current.levels[k], warped.levels[k], gate));
  return out;
}

}  // namespace sports
