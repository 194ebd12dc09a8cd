#pragma once

// Mask association, embedding track scores and identity repair between
// consecutive panoptic frames.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sports/panoptic.hpp"

namespace sports {

inline constexpr double kDefaultAlpha1 = 0.7;
inline constexpr double kDefaultAlpha2 = 0.3;
inline constexpr double kDefaultIouFloor = 0.5;

/// |A n B| / |A u B|. Throws when the segments come from differently sized frames.
double mask_iou(const Segment& a, const Segment& b);

enum class MatchLabel { kPositive, kNegative, kIgnore };

struct KernelPair {
  std::size_t key = 0;
  std::size_t ref = 0;
  MatchLabel label = MatchLabel::kIgnore;
  double iou = 0.0;
};

/// Labels every (key, ref) pair: IoU > alpha1 positive, IoU < alpha2 negative,
/// otherwise ignore. Requires 0 <= alpha2 <= alpha1 <= 1.
std::vector<KernelPair> associate_kernels(std::span<const Segment> key, std::span<const Segment> ref,
                                          double alpha1 = kDefaultAlpha1, double alpha2 = kDefaultAlpha2);

using Embedding = std::vector<double>;

/// -sum_{k+} log( e^{v.k+} / (e^{v.k+} + sum_{k-} e^{v.k-}) ), evaluated with
/// log-sum-exp.
double contrastive_track_score(std::span<const double> v, std::span<const Embedding> positives,
                               std::span<const Embedding> negatives);

/// (cos(v, k) - c)^2 with c in {0, 1}.
double aux_cosine_score(std::span<const double> v, std::span<const double> k, int c);

/// Sequence-scoped monotone instance-id counter. Ids are never reused.
class InstanceIdAllocator {
 public:
  explicit InstanceIdAllocator(std::uint16_t first = 1) : next_(first) {}
  std::uint16_t allocate();
  std::uint16_t peek() const { return next_; }

 private:
  std::uint16_t next_;
};

struct MatchRecord {
  enum class Kind { kInherited, kUnknown };
  Kind kind = Kind::kInherited;
  int frame = 0;
  std::uint32_t current_code = 0;   // panoptic code after repair (inherited) or before (unknown)
  std::uint32_t previous_code = 0;  // panoptic code of the matched previous segment
  double iou = 0.0;
};

struct PostMatchResult {
  PanopticMap current;   // current frame with repaired ids and unknown flags
  PanopticMap previous;  // previous frame with unknown flags added on class conflicts
  std::vector<MatchRecord> report;
};

struct PostMatchOptions {
  double iou_floor = kDefaultIouFloor;
  /// Compare against the flow-warped previous map (true) or the raw one.
  bool use_warped_previous = true;
  int frame = 0;
};

/// Repairs instance ids of `curr` against the previous frame.
///
/// Each current segment is matched to the reference segment of largest IoU
/// (at least iou_floor), one-to-one, ties going to the larger IoU then the
/// smaller current code. Agreeing classes inherit the previous instance id;
/// disagreeing classes flag both segments unknown; unmatched thing segments
/// receive fresh ids from `ids`.
PostMatchResult post_match(const PanopticMap& prev, const PanopticMap& curr,
                           const PanopticMap& flow_warp_of_prev, InstanceIdAllocator& ids,
                           const PostMatchOptions& options = {});

/// Relabels every thing instance of the first frame of a sequence with fresh ids.
PanopticMap assign_fresh_ids(const PanopticMap& map, InstanceIdAllocator& ids);

/// `frame curr <- prev iou` or `frame seg UNKNOWN reason=class_mismatch`.
std::string format_match_report(std::span<const MatchRecord> records);

}  // namespace sports
