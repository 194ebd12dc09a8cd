#include "sports/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace sports {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct PairStats {
  std::uint32_t curr = 0;
  std::uint32_t ref = 0;
  double iou = 0.0;
};

}  // namespace

double mask_iou(const Segment& a, const Segment& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("mask_iou: segments come from different frame sizes");
  std::size_t inter = 0;
  auto ia = a.runs.begin();
  auto ib = b.runs.begin();
  while (ia != a.runs.end() && ib != b.runs.end()) {
    const std::uint32_t lo = std::max(ia->start, ib->start);
    const std::uint32_t hi = std::min(ia->start + ia->length, ib->start + ib->length);
    if (hi > lo) inter += hi - lo;
    if (ia->start + ia->length < ib->start + ib->length)
      ++ia;
    else
      ++ib;
  }
  const std::size_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<KernelPair> associate_kernels(std::span<const Segment> key, std::span<const Segment> ref,
                                          double alpha1, double alpha2) {
  if (!(0.0 <= alpha2 && alpha2 <= alpha1 && alpha1 <= 1.0))
    throw std::invalid_argument("associate_kernels: thresholds must satisfy 0 <= alpha2 <= alpha1 <= 1");
  std::vector<KernelPair> out;
  out.reserve(key.size() * ref.size());
  for (std::size_t k = 0; k < key.size(); ++k) {
    for (std::size_t r = 0; r < ref.size(); ++r) {
      const double iou = mask_iou(key[k], ref[r]);
      MatchLabel label = MatchLabel::kIgnore;
      if (iou > alpha1)
        label = MatchLabel::kPositive;
      else if (iou < alpha2)
        label = MatchLabel::kNegative;
      out.push_back({k, r, label, iou});
    }
  }
  return out;
}

double contrastive_track_score(std::span<const double> v, std::span<const Embedding> positives,
                               std::span<const Embedding> negatives) {
  if (positives.empty()) throw std::invalid_argument("contrastive_track_score: no positive targets");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("contrastive_track_score: non-finite embedding");

  std::vector<double> neg(negatives.size());
  double neg_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    neg[i] = dot(v, negatives[i]);
    neg_max = std::max(neg_max, neg[i]);
  }
  double total = 0.0;
  for (const auto& kp : positives) {
    const double s = dot(v, kp);
    const double m = std::max(s, neg_max);
    double acc = std::exp(s - m);
    for (double sn : neg) acc += std::exp(sn - m);
    total += (m + std::log(acc)) - s;
  }
  return total;
}

double aux_cosine_score(std::span<const double> v, std::span<const double> k, int c) {
  if (c != 0 && c != 1) throw std::invalid_argument("aux_cosine_score: c must be 0 or 1");
  const double nv = std::sqrt(dot(v, v));
  const double nk = std::sqrt(dot(k, k));
  if (!(nv > 0.0) || !(nk > 0.0)) throw std::invalid_argument("aux_cosine_score: zero-length embedding");
  const double cosine = dot(v, k) / (nv * nk);
  const double d = cosine - c;
  return d * d;
}

std::uint16_t InstanceIdAllocator::allocate() {
  if (next_ >= kPanopticDivisor) throw std::overflow_error("instance id space exhausted");
  return next_++;
}

PanopticMap assign_fresh_ids(const PanopticMap& map, InstanceIdAllocator& ids) {
  PanopticMap out = map;
  std::map<std::uint32_t, std::uint16_t> remap;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.semantic[i] == 0 || map.instance[i] == 0) continue;
    remap.emplace(map.code(i), 0);
  }
  for (auto& [code, id] : remap) id = ids.allocate();
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.semantic[i] == 0 || map.instance[i] == 0) continue;
    out.instance[i] = remap.at(map.code(i));
  }
  return out;
}

PostMatchResult post_match(const PanopticMap& prev, const PanopticMap& curr,
                           const PanopticMap& flow_warp_of_prev, InstanceIdAllocator& ids,
                           const PostMatchOptions& options) {
  if (!prev.same_shape(curr) || !prev.same_shape(flow_warp_of_prev))
    throw std::invalid_argument("post_match: panoptic maps differ in size");
  const PanopticMap& ref = options.use_warped_previous ? flow_warp_of_prev : prev;

  // Areas and pairwise intersections in one pass; unknown and void pixels do
  // not belong to any segment.
  std::map<std::uint32_t, std::size_t> curr_area;
  std::map<std::uint32_t, std::size_t> ref_area;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> inter;
  for (std::size_t i = 0; i < curr.size(); ++i) {
    const bool in_curr = curr.semantic[i] != 0 && !curr.unknown[i];
    const bool in_ref = ref.semantic[i] != 0 && !ref.unknown[i];
    if (in_curr) ++curr_area[curr.code(i)];
    if (in_ref) ++ref_area[ref.code(i)];
    if (in_curr && in_ref) ++inter[{curr.code(i), ref.code(i)}];
  }

  std::vector<PairStats> candidates;
  for (const auto& [key, n] : inter) {
    const double uni = static_cast<double>(curr_area[key.first] + ref_area[key.second] - n);
    const double iou = static_cast<double>(n) / uni;
    if (iou >= options.iou_floor) candidates.push_back({key.first, key.second, iou});
  }
  std::sort(candidates.begin(), candidates.end(), [](const PairStats& a, const PairStats& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.curr != b.curr) return a.curr < b.curr;
    return a.ref < b.ref;
  });

  std::map<std::uint32_t, std::uint32_t> matched;  // curr code -> ref code
  std::map<std::uint32_t, double> matched_iou;
  std::map<std::uint32_t, bool> ref_taken;
  for (const auto& c : candidates) {
    if (matched.count(c.curr) || ref_taken[c.ref]) continue;
    matched[c.curr] = c.ref;
    matched_iou[c.curr] = c.iou;
    ref_taken[c.ref] = true;
  }

  PostMatchResult result{curr, prev, {}};
  std::unordered_map<std::uint32_t, std::uint16_t> new_instance;
  std::map<std::uint32_t, bool> curr_unknown;
  std::map<std::uint32_t, bool> prev_unknown;

  for (const auto& [code, area] : curr_area) {
    const std::uint16_t cls = static_cast<std::uint16_t>(code / kPanopticDivisor);
    const std::uint16_t inst = static_cast<std::uint16_t>(code % kPanopticDivisor);
    auto it = matched.find(code);
    if (it != matched.end()) {
      const std::uint32_t rcode = it->second;
      const auto rcls = static_cast<std::uint16_t>(rcode / kPanopticDivisor);
      const auto rinst = static_cast<std::uint16_t>(rcode % kPanopticDivisor);
      if (rcls != cls) {
        curr_unknown[code] = true;
        prev_unknown[rcode] = true;
        result.report.push_back(
            {MatchRecord::Kind::kUnknown, options.frame, code, rcode, matched_iou[code]});
        continue;
      }
      if (inst == 0 || rinst != 0) {
        new_instance[code] = rinst;
        result.report.push_back({MatchRecord::Kind::kInherited, options.frame,
                                 cls * kPanopticDivisor + rinst, rcode, matched_iou[code]});
        continue;
      }
    }
    if (inst != 0) new_instance[code] = ids.allocate();
  }

  for (std::size_t i = 0; i < curr.size(); ++i) {
    if (curr.semantic[i] == 0 || curr.unknown[i]) continue;
    const std::uint32_t code = curr.code(i);
    if (curr_unknown.count(code)) {
      result.current.unknown[i] = 1;
      continue;
    }
    if (auto it = new_instance.find(code); it != new_instance.end()) result.current.instance[i] = it->second;
  }
  for (std::size_t i = 0; i < prev.size(); ++i)
    if (prev.semantic[i] != 0 && prev_unknown.count(prev.code(i))) result.previous.unknown[i] = 1;
  return result;
}

std::string format_match_report(std::span<const MatchRecord> records) {
  std::string out;
  char line[128];
  for (const auto& r : records) {
    if (r.kind == MatchRecord::Kind::kInherited)
      std::snprintf(line, sizeof line, "%d %u <- %u %.6f\n", r.frame, r.current_code, r.previous_code, r.iou);
    else
      std::snprintf(line, sizeof line, "%d %u UNKNOWN reason=class_mismatch\n", r.frame, r.current_code);
    out += line;
  }
  return out;
}

}  // namespace sports
