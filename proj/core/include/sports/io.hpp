#pragma once

// File formats: DMAP depth, PMAP panoptic, Middlebury .flo, PPM (P6), text PLY
// clouds, TUM trajectories, AGFW fusion parameters, DYNM dynamic scores and
// FEAT feature maps. All little-endian; all writes are atomic.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/image.hpp"
#include "sports/metrics.hpp"
#include "sports/odometry.hpp"
#include "sports/panoptic.hpp"
#include "sports/rendering.hpp"
#include "sports/warpfusion.hpp"

namespace sports {

using Bytes = std::vector<std::uint8_t>;

/// Missing, unreadable or malformed file. `offset` is the byte at which
/// parsing failed (0 for open failures).
class IoError : public std::runtime_error {
 public:
  IoError(std::string file, std::uint64_t offset, const std::string& message);
  const std::string& file() const { return file_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::string file_;
  std::uint64_t offset_;
};

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Shortest decimal text that parses back to the same value.
std::string format_double(double v);
std::string format_float(float v);

// Each format has an in-memory encoder/decoder pair; `name` labels errors.
Bytes encode_dmap(const DepthMap& depth);
DepthMap decode_dmap(std::span<const std::uint8_t> bytes, const std::string& name);
Bytes encode_pmap(const PanopticMap& map);
PanopticMap decode_pmap(std::span<const std::uint8_t> bytes, const std::string& name);

/// Invalid flow vectors are written as 1e10 (Middlebury "unknown").
Bytes encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const std::uint8_t> bytes, const std::string& name);

Bytes encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes, const std::string& name);

Bytes encode_dynm(const DynamicMask& mask);
DynamicMask decode_dynm(std::span<const std::uint8_t> bytes, const std::string& name);

Bytes encode_feat(const FeatureMap& map);
FeatureMap decode_feat(std::span<const std::uint8_t> bytes, const std::string& name);

Bytes encode_agfw(const FusionModel& model);
FusionModel decode_agfw(std::span<const std::uint8_t> bytes, const std::string& name);

std::string encode_ply(const DescriptorCloud& cloud);
DescriptorCloud decode_ply(std::string_view text, const std::string& name);

/// `timestamp tx ty tz qx qy qz qw` per line; '#' lines are comments.
std::string encode_tum(const Trajectory& trajectory);
Trajectory decode_tum(std::string_view text, const std::string& name);

DepthMap load_dmap(const std::filesystem::path& path);
void save_dmap(const std::filesystem::path& path, const DepthMap& depth);
PanopticMap load_pmap(const std::filesystem::path& path);
void save_pmap(const std::filesystem::path& path, const PanopticMap& map);
FlowField load_flo(const std::filesystem::path& path);
void save_flo(const std::filesystem::path& path, const FlowField& flow);
RgbImage load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const RgbImage& image);
DynamicMask load_dynm(const std::filesystem::path& path);
void save_dynm(const std::filesystem::path& path, const DynamicMask& mask);
FeatureMap load_feat(const std::filesystem::path& path);
void save_feat(const std::filesystem::path& path, const FeatureMap& map);
FusionModel load_agfw(const std::filesystem::path& path);
void save_agfw(const std::filesystem::path& path, const FusionModel& model);
DescriptorCloud load_ply(const std::filesystem::path& path);
void save_ply(const std::filesystem::path& path, const DescriptorCloud& cloud);
Trajectory load_tum(const std::filesystem::path& path);
void save_tum(const std::filesystem::path& path, const Trajectory& trajectory);

}  // namespace sports
