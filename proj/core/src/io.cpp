#include "sports/io.hpp"

#include <unistd.h>

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <cctype>

namespace sports {
namespace {

constexpr float kUnknownFlow = 1e10f;
constexpr float kUnknownFlowThreshold = 1e9f;
constexpr float kFloMagic = 202021.25f;

class ByteWriter {
 public:
  void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  [[noreturn]] void fail(const std::string& message) const { throw IoError(name_, pos_, message); }
  [[noreturn]] void fail_at(std::size_t offset, const std::string& message) const {
    throw IoError(name_, offset, message);
  }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated: expected " + std::to_string(n) + " more bytes");
  }
  void magic(std::string_view m) {
    need(m.size());
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0) fail("bad magic, expected " + std::string(m));
    pos_ += m.size();
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  void expect_end() const {
    if (pos_ != bytes_.size()) fail("trailing bytes after payload");
  }
  /// Dimension read with a sanity bound so corrupt headers fail cleanly.
  int dim(const char* what) {
    const std::size_t at = pos_;
    const std::uint32_t v = u32();
    if (v > (1u << 16)) fail_at(at, std::string("implausible ") + what + " " + std::to_string(v));
    return static_cast<int>(v);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string_view as_text(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

bool parse_double(std::string_view tok, double& out) {
  const char* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

bool parse_float(std::string_view tok, float& out) {
  const char* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Calls fn(line, offset) for each line of text.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    fn(text.substr(pos, nl - pos), pos);
    pos = nl + 1;
  }
}

}  // namespace

IoError::IoError(std::string file, std::uint64_t offset, const std::string& message)
    : std::runtime_error(file + ": byte " + std::to_string(offset) + ": " + message),
      file_(std::move(file)),
      offset_(offset) {}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), 0, "cannot open file");
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), data.size(), "read failed");
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), 0, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError(tmp.string(), 0, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError(path.string(), 0, "rename failed: " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, as_bytes(text));
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_float(float v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// ---- DMAP ----

Bytes encode_dmap(const DepthMap& depth) {
  ByteWriter w;
  w.magic("DMAP");
  w.u32(static_cast<std::uint32_t>(depth.width));
  w.u32(static_cast<std::uint32_t>(depth.height));
  for (std::size_t i = 0; i < depth.size(); ++i)
    w.f32(depth.is_valid(i) ? static_cast<float>(depth.depth[i]) : std::numeric_limits<float>::quiet_NaN());
  return w.take();
}

DepthMap decode_dmap(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.magic("DMAP");
  const int w = r.dim("width");
  const int h = r.dim("height");
  DepthMap d(w, h);
  r.need(4 * d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t at = r.pos();
    const float v = r.f32();
    if (std::isnan(v)) continue;
    if (!(v > 0.0f) || !std::isfinite(v)) r.fail_at(at, "depth must be positive and finite or NaN");
    d.set(i, v);
  }
  r.expect_end();
  return d;
}

// ---- PMAP ----

Bytes encode_pmap(const PanopticMap& map) {
  ByteWriter w;
  w.magic("PMAP");
  w.u32(static_cast<std::uint32_t>(map.width));
  w.u32(static_cast<std::uint32_t>(map.height));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.instance[i] >= kPanopticDivisor) throw std::invalid_argument("encode_pmap: instance id >= 10000");
    w.u32(map.code(i));
  }
  for (std::size_t i = 0; i < map.size(); ++i) w.u8(map.unknown[i] ? 1 : 0);
  return w.take();
}

PanopticMap decode_pmap(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.magic("PMAP");
  const int w = r.dim("width");
  const int h = r.dim("height");
  PanopticMap m(w, h);
  r.need(5 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::size_t at = r.pos();
    const std::uint32_t code = r.u32();
    const std::uint32_t sem = code / kPanopticDivisor;
    if (sem > std::numeric_limits<std::uint16_t>::max()) r.fail_at(at, "semantic id out of range");
    m.semantic[i] = static_cast<std::uint16_t>(sem);
    m.instance[i] = static_cast<std::uint16_t>(code % kPanopticDivisor);
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::size_t at = r.pos();
    const std::uint8_t u = r.u8();
    if (u > 1) r.fail_at(at, "unknown flag must be 0 or 1");
    m.unknown[i] = u;
  }
  r.expect_end();
  return m;
}

// ---- .flo ----

Bytes encode_flo(const FlowField& flow) {
  ByteWriter w;
  w.f32(kFloMagic);
  w.i32(flow.width);
  w.i32(flow.height);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (flow.valid[i]) {
      w.f32(static_cast<float>(flow.flow[i].x()));
      w.f32(static_cast<float>(flow.flow[i].y()));
    } else {
      w.f32(kUnknownFlow);
      w.f32(kUnknownFlow);
    }
  }
  return w.take();
}

FlowField decode_flo(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  if (r.f32() != kFloMagic) r.fail_at(0, "bad magic, expected 202021.25");
  const int w = r.dim("width");
  const int h = r.dim("height");
  FlowField f(w, h);
  r.need(8 * f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const float u = r.f32();
    const float v = r.f32();
    if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) > kUnknownFlowThreshold ||
        std::abs(v) > kUnknownFlowThreshold)
      continue;
    f.flow[i] = Vector2(u, v);
    f.valid[i] = 1;
  }
  r.expect_end();
  return f;
}

// ---- PPM ----

Bytes encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes, const std::string& name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void { throw IoError(name, pos, msg); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> int {
    skip_space();
    const std::size_t start = pos;
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1 << 16)) fail("header number too large");
      ++pos;
    }
    if (pos == start) fail("expected a header number");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail("bad magic, expected P6");
  pos = 2;
  const int w = number();
  const int h = number();
  const int maxval = number();
  if (maxval != 255) fail("only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("expected whitespace after header");
  ++pos;
  RgbImage img(w, h);
  if (bytes.size() - pos < img.data.size()) fail("truncated pixel data");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.data.size(), img.data.begin());
  pos += img.data.size();
  if (pos != bytes.size()) fail("trailing bytes after pixel data");
  return img;
}

// ---- DYNM ----

Bytes encode_dynm(const DynamicMask& mask) {
  ByteWriter w;
  w.magic("DYNM");
  w.u32(static_cast<std::uint32_t>(mask.width));
  w.u32(static_cast<std::uint32_t>(mask.height));
  for (double s : mask.scores) w.f32(static_cast<float>(s));
  return w.take();
}

DynamicMask decode_dynm(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.magic("DYNM");
  const int w = r.dim("width");
  const int h = r.dim("height");
  DynamicMask m(w, h);
  r.need(4 * m.scores.size());
  for (auto& s : m.scores) {
    const std::size_t at = r.pos();
    const float v = r.f32();
    if (!std::isfinite(v)) r.fail_at(at, "non-finite dynamic score");
    s = v;
  }
  r.expect_end();
  return m;
}

// ---- FEAT ----

Bytes encode_feat(const FeatureMap& map) {
  ByteWriter w;
  w.magic("FEAT");
  w.u32(static_cast<std::uint32_t>(map.width));
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u32(static_cast<std::uint32_t>(map.channels));
  for (double v : map.data) w.f32(static_cast<float>(v));
  return w.take();
}

FeatureMap decode_feat(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.magic("FEAT");
  const int w = r.dim("width");
  const int h = r.dim("height");
  const int c = r.dim("channel count");
  FeatureMap m(w, h, c);
  r.need(4 * m.data.size());
  for (auto& v : m.data) v = r.f32();
  r.expect_end();
  return m;
}

// ---- AGFW ----

Bytes encode_agfw(const FusionModel& model) {
  ByteWriter w;
  w.magic("AGFW");
  w.u32(static_cast<std::uint32_t>(model.branches.size()));
  for (const auto& g : model.branches) {
    g.validate();
    w.u32(static_cast<std::uint32_t>(g.channels));
    w.u32(static_cast<std::uint32_t>(g.kernel_size));
    for (int i = 0; i < 2 * g.channels; ++i) {
      w.f32(static_cast<float>(g.scale[i]));
      w.f32(static_cast<float>(g.bias[i]));
    }
    for (double k : g.kernel) w.f32(static_cast<float>(k));
  }
  return w.take();
}

FusionModel decode_agfw(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  r.magic("AGFW");
  const std::size_t count_at = r.pos();
  const std::uint32_t count = r.u32();
  if (count > 64) r.fail_at(count_at, "implausible branch count " + std::to_string(count));
  FusionModel model;
  for (std::uint32_t b = 0; b < count; ++b) {
    const std::size_t at = r.pos();
    const int c = r.dim("channel count");
    const int n = r.dim("kernel size");
    if (c < 1 || n < 1 || n % 2 == 0 || n > 31) r.fail_at(at, "invalid branch shape");
    AttentionGate g = AttentionGate::zeros(c, n);
    for (int i = 0; i < 2 * c; ++i) {
      g.scale[i] = r.f32();
      g.bias[i] = r.f32();
    }
    for (auto& k : g.kernel) k = r.f32();
    model.branches.push_back(std::move(g));
  }
  r.expect_end();
  return model;
}

// ---- PLY ----

std::string encode_ply(const DescriptorCloud& cloud) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.points.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n";
  for (int d = 0; d < kDescriptorSize; ++d) out += "property float d" + std::to_string(d) + "\n";
  out += "end_header\n";
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) {
      out += format_float(static_cast<float>(p.position[a]));
      out += ' ';
    }
    for (int d = 0; d < kDescriptorSize; ++d) {
      out += format_float(p.descriptor[d]);
      out += d + 1 < kDescriptorSize ? ' ' : '\n';
    }
  }
  return out;
}

DescriptorCloud decode_ply(std::string_view text, const std::string& name) {
  std::vector<std::pair<std::string_view, std::size_t>> lines;
  for_each_line(text, [&](std::string_view line, std::size_t off) { lines.emplace_back(line, off); });
  std::size_t li = 0;
  auto expect = [&](std::string_view want) {
    if (li >= lines.size()) throw IoError(name, text.size(), "truncated header");
    if (split_ws(lines[li].first) != split_ws(want))
      throw IoError(name, lines[li].second, "expected '" + std::string(want) + "'");
    ++li;
  };
  expect("ply");
  expect("format ascii 1.0");
  if (li >= lines.size()) throw IoError(name, text.size(), "truncated header");
  const auto vertex = split_ws(lines[li].first);
  std::size_t count = 0;
  if (vertex.size() != 3 || vertex[0] != "element" || vertex[1] != "vertex" ||
      std::from_chars(vertex[2].data(), vertex[2].data() + vertex[2].size(), count).ec != std::errc{})
    throw IoError(name, lines[li].second, "expected 'element vertex N'");
  ++li;
  for (const char* p : {"x", "y", "z"}) expect(std::string("property float ") + p);
  for (int d = 0; d < kDescriptorSize; ++d) expect("property float d" + std::to_string(d));
  expect("end_header");

  DescriptorCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t n = 0; n < count; ++n, ++li) {
    if (li >= lines.size()) throw IoError(name, text.size(), "truncated vertex list");
    const auto tok = split_ws(lines[li].first);
    if (tok.size() != 3 + kDescriptorSize) throw IoError(name, lines[li].second, "expected 11 values per vertex");
    CloudPoint p;
    for (int a = 0; a < 3; ++a) {
      float v = 0;
      if (!parse_float(tok[a], v) || !std::isfinite(v)) throw IoError(name, lines[li].second, "bad coordinate");
      p.position[a] = v;
    }
    for (int d = 0; d < kDescriptorSize; ++d)
      if (!parse_float(tok[3 + d], p.descriptor[d])) throw IoError(name, lines[li].second, "bad descriptor value");
    p.frame = 0;
    p.pixel = static_cast<std::uint32_t>(n);
    cloud.points.push_back(p);
  }
  for (; li < lines.size(); ++li)
    if (!split_ws(lines[li].first).empty()) throw IoError(name, lines[li].second, "trailing data after vertices");
  return cloud;
}

// ---- TUM ----

std::string encode_tum(const Trajectory& trajectory) {
  trajectory.validate();
  std::string out;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const Pose& p = trajectory.poses[i];
    const auto& q = p.rotation();
    const auto& t = p.translation();
    out += format_double(trajectory.timestamps[i]);
    for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

Trajectory decode_tum(std::string_view text, const std::string& name) {
  Trajectory traj;
  for_each_line(text, [&](std::string_view line, std::size_t off) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') return;
    if (tok.size() != 8) throw IoError(name, off, "expected 8 values: timestamp tx ty tz qx qy qz qw");
    std::array<double, 8> v{};
    for (int k = 0; k < 8; ++k)
      if (!parse_double(tok[k], v[k]) || !std::isfinite(v[k])) throw IoError(name, off, "bad number");
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-6) throw IoError(name, off, "degenerate quaternion");
    if (!traj.timestamps.empty() && !(v[0] > traj.timestamps.back()))
      throw IoError(name, off, "timestamps must be strictly increasing");
    traj.timestamps.push_back(v[0]);
    traj.poses.emplace_back(q, Vector3(v[1], v[2], v[3]));
  });
  return traj;
}

// ---- file wrappers ----

DepthMap load_dmap(const std::filesystem::path& path) { return decode_dmap(read_file(path), path.string()); }
void save_dmap(const std::filesystem::path& path, const DepthMap& depth) { write_file_atomic(path, encode_dmap(depth)); }
PanopticMap load_pmap(const std::filesystem::path& path) { return decode_pmap(read_file(path), path.string()); }
void save_pmap(const std::filesystem::path& path, const PanopticMap& map) { write_file_atomic(path, encode_pmap(map)); }
FlowField load_flo(const std::filesystem::path& path) { return decode_flo(read_file(path), path.string()); }
void save_flo(const std::filesystem::path& path, const FlowField& flow) { write_file_atomic(path, encode_flo(flow)); }
RgbImage load_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path), path.string()); }
void save_ppm(const std::filesystem::path& path, const RgbImage& image) { write_file_atomic(path, encode_ppm(image)); }
DynamicMask load_dynm(const std::filesystem::path& path) { return decode_dynm(read_file(path), path.string()); }
void save_dynm(const std::filesystem::path& path, const DynamicMask& mask) { write_file_atomic(path, encode_dynm(mask)); }
FeatureMap load_feat(const std::filesystem::path& path) { return decode_feat(read_file(path), path.string()); }
void save_feat(const std::filesystem::path& path, const FeatureMap& map) { write_file_atomic(path, encode_feat(map)); }
FusionModel load_agfw(const std::filesystem::path& path) { return decode_agfw(read_file(path), path.string()); }
void save_agfw(const std::filesystem::path& path, const FusionModel& model) {
  write_file_atomic(path, encode_agfw(model));
}
DescriptorCloud load_ply(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return decode_ply(as_text(b), path.string());
}
void save_ply(const std::filesystem::path& path, const DescriptorCloud& cloud) {
  write_text_atomic(path, encode_ply(cloud));
}
Trajectory load_tum(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return decode_tum(as_text(b), path.string());
}
void save_tum(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_text_atomic(path, encode_tum(trajectory));
}

}  // namespace sports
