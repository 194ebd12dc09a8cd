#include "sports/metrics.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace sports {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ClassTally {
  double iou_sum = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

double mean_or_nan(double sum, int n) { return n > 0 ? sum / n : kNaN; }

std::array<double, 121> gaussian_window() {
  std::array<double, 121> w{};
  double sum = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      const double dx = x - 5;
      const double dy = y - 5;
      w[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      sum += w[y * 11 + x];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

std::set<std::uint16_t> infer_thing_classes(std::span<const PanopticMap> gt) {
  std::set<std::uint16_t> things;
  for (const auto& m : gt)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.semantic[i] != 0 && m.instance[i] != 0) things.insert(m.semantic[i]);
  return things;
}

VpqResult vpq(std::span<const PanopticMap> pred, std::span<const PanopticMap> gt, int k,
              const std::optional<std::set<std::uint16_t>>& thing_classes) {
  if (pred.size() != gt.size()) throw std::invalid_argument("vpq: sequences differ in length");
  if (k < 0 || static_cast<std::size_t>(k) + 1 > gt.size())
    throw std::invalid_argument("vpq: window k+1 exceeds sequence length");
  for (std::size_t t = 0; t < gt.size(); ++t)
    if (!pred[t].same_shape(gt[t]) || !gt[t].same_shape(gt[0]))
      throw std::invalid_argument("vpq: frame sizes differ");
  const std::set<std::uint16_t> things = thing_classes ? *thing_classes : infer_thing_classes(gt);

  VpqResult result;
  result.k = k;
  double total_sum = 0.0, things_sum = 0.0, stuff_sum = 0.0;
  int total_n = 0, things_n = 0, stuff_n = 0;

  const std::size_t starts = gt.size() - static_cast<std::size_t>(k);
  for (std::size_t s = 0; s < starts; ++s) {
    std::map<std::uint32_t, std::size_t> gt_area;
    std::map<std::uint32_t, std::size_t> pred_area;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;  // (pred, gt)
    for (std::size_t t = s; t <= s + static_cast<std::size_t>(k); ++t) {
      const PanopticMap& g = gt[t];
      const PanopticMap& p = pred[t];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.semantic[i] == 0 || g.unknown[i] || p.unknown[i]) continue;
        const std::uint32_t gc = g.code(i);
        ++gt_area[gc];
        if (p.semantic[i] == 0) continue;
        const std::uint32_t pc = p.code(i);
        ++pred_area[pc];
        ++inter[{pc, gc}];
      }
    }

    std::map<std::uint16_t, ClassTally> tally;
    for (const auto& [gc, area] : gt_area) tally[static_cast<std::uint16_t>(gc / kPanopticDivisor)];
    std::set<std::uint32_t> gt_matched;
    std::set<std::uint32_t> pred_matched;
    for (const auto& [key, n] : inter) {
      const auto [pc, gc] = key;
      if (pc / kPanopticDivisor != gc / kPanopticDivisor) continue;
      const double iou = static_cast<double>(n) / static_cast<double>(pred_area[pc] + gt_area[gc] - n);
      if (iou <= kTubeMatchIou) continue;
      auto& t = tally[static_cast<std::uint16_t>(gc / kPanopticDivisor)];
      t.iou_sum += iou;
      ++t.tp;
      gt_matched.insert(gc);
      pred_matched.insert(pc);
    }
    for (const auto& [gc, area] : gt_area)
      if (!gt_matched.count(gc)) ++tally[static_cast<std::uint16_t>(gc / kPanopticDivisor)].fn;
    for (const auto& [pc, area] : pred_area) {
      const auto cls = static_cast<std::uint16_t>(pc / kPanopticDivisor);
      auto it = tally.find(cls);
      if (it != tally.end() && !pred_matched.count(pc)) ++it->second.fp;
    }

    double w_sum = 0.0, w_things = 0.0, w_stuff = 0.0;
    int n_all = 0, n_things = 0, n_stuff = 0;
    for (const auto& [cls, t] : tally) {
      const double pq = t.iou_sum / (t.tp + 0.5 * t.fp + 0.5 * t.fn);
      w_sum += pq;
      ++n_all;
      if (things.count(cls)) {
        w_things += pq;
        ++n_things;
      } else {
        w_stuff += pq;
        ++n_stuff;
      }
    }
    if (n_all == 0) continue;
    total_sum += w_sum / n_all;
    ++total_n;
    if (n_things) {
      things_sum += w_things / n_things;
      ++things_n;
    }
    if (n_stuff) {
      stuff_sum += w_stuff / n_stuff;
      ++stuff_n;
    }
  }
  result.windows = total_n;
  result.total = total_n ? total_sum / total_n : 0.0;
  result.things = mean_or_nan(things_sum, things_n);
  result.stuff = mean_or_nan(stuff_sum, stuff_n);
  return result;
}

void Trajectory::validate() const {
  if (timestamps.size() != poses.size()) throw std::invalid_argument("Trajectory: timestamp/pose count mismatch");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1]))
      throw std::invalid_argument("Trajectory: timestamps must be strictly increasing");
}

std::vector<std::pair<std::size_t, std::size_t>> associate_trajectories(const Trajectory& est, const Trajectory& gt,
                                                                        double max_dt) {
  struct Candidate {
    double dt;
    std::size_t e, g;
  };
  std::vector<Candidate> cands;
  for (std::size_t e = 0; e < est.size(); ++e) {
    auto it = std::lower_bound(gt.timestamps.begin(), gt.timestamps.end(), est.timestamps[e] - max_dt);
    for (; it != gt.timestamps.end() && *it <= est.timestamps[e] + max_dt; ++it)
      cands.push_back({std::abs(*it - est.timestamps[e]), e, static_cast<std::size_t>(it - gt.timestamps.begin())});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.dt != b.dt) return a.dt < b.dt;
    if (a.e != b.e) return a.e < b.e;
    return a.g < b.g;
  });
  std::vector<char> used_e(est.size(), 0), used_g(gt.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& c : cands) {
    if (used_e[c.e] || used_g[c.g]) continue;
    used_e[c.e] = used_g[c.g] = 1;
    pairs.emplace_back(c.e, c.g);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, bool scale_align) {
  est.validate();
  gt.validate();
  const auto pairs = associate_trajectories(est, gt);
  if (pairs.size() < 3) throw std::invalid_argument("ate_rmse: fewer than 3 associated poses");
  Eigen::Matrix3Xd src(3, pairs.size());
  Eigen::Matrix3Xd dst(3, pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src.col(i) = est.poses[pairs[i].first].translation();
    dst.col(i) = gt.poses[pairs[i].second].translation();
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, scale_align);
  const Eigen::Matrix3Xd aligned = (t.topLeftCorner<3, 3>() * src).colwise() + t.topRightCorner<3, 1>();
  return std::sqrt((aligned - dst).colwise().squaredNorm().mean());
}

double psnr(const RgbImage& a, const RgbImage& b, double peak, std::span<const std::uint8_t> mask) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: image sizes differ");
  if (!mask.empty() && mask.size() != a.pixel_count()) throw std::invalid_argument("psnr: mask size mismatch");
  double se = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    if (!mask.empty() && !mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = static_cast<double>(a.data[3 * p + ch]) - static_cast<double>(b.data[3 * p + ch]);
      se += d * d;
    }
    n += 3;
  }
  if (n == 0) throw std::invalid_argument("psnr: empty comparison region");
  const double mse = se / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const RgbImage& a, const RgbImage& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: image sizes differ");
  if (a.width < 11 || a.height < 11) throw std::invalid_argument("ssim: images must be at least 11x11");
  static const std::array<double, 121> window = gaussian_window();
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double channel_sum = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    double sum = 0.0;
    int count = 0;
    for (int r = 0; r + 11 <= a.height; ++r) {
      for (int c = 0; c + 11 <= a.width; ++c) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int y = 0; y < 11; ++y)
          for (int x = 0; x < 11; ++x) {
            const double w = window[y * 11 + x];
            const double va = a.at(r + y, c + x, ch);
            const double vb = b.at(r + y, c + x, ch);
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
    channel_sum += sum / count;
  }
  return channel_sum / 3.0;
}

std::string format_metric_line(const std::string& metric, int k, double total, double things, double stuff) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %d %.9f %.9f %.9f", metric.c_str(), k, total, things, stuff);
  return buf;
}

}  // namespace sports
