#include "sports/sequence.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

#include "sports/io.hpp"

namespace sports {
namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ManifestEntry {
  std::string value;
  std::size_t offset = 0;
};

class Manifest {
 public:
  Manifest(std::string_view text, std::string name) : name_(std::move(name)) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      const std::size_t offset = pos;
      pos = nl + 1;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw IoError(name_, offset, "expected key=value");
      std::string key(trim(line.substr(0, eq)));
      if (entries_.count(key)) throw IoError(name_, offset, "duplicate key '" + key + "'");
      entries_[key] = {std::string(trim(line.substr(eq + 1))), offset};
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const ManifestEntry& get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw IoError(name_, 0, "missing key '" + key + "'");
    return it->second;
  }
  template <typename T>
  T number(const std::string& key) const {
    const auto& e = get(key);
    T v{};
    const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc{} || res.ptr != e.value.data() + e.value.size())
      throw IoError(name_, e.offset, "bad number for '" + key + "'");
    return v;
  }
  const std::map<std::string, ManifestEntry>& entries() const { return entries_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::map<std::string, ManifestEntry> entries_;
};

fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / kManifestName : p; }

}  // namespace

std::string frame_stem(std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", frame);
  return buf;
}

bool FrameState::operator==(const FrameState& o) const {
  auto same_depth = [](const DepthMap& a, const DepthMap& b) {
    if (a.width != b.width || a.height != b.height || a.valid != b.valid) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.valid[i] && a.depth[i] != b.depth[i]) return false;
    return true;
  };
  auto same_flow = [](const FlowField& a, const FlowField& b) {
    if (a.width != b.width || a.height != b.height || a.valid != b.valid) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.valid[i] && a.flow[i] != b.flow[i]) return false;
    return true;
  };
  return rgb.width == o.rgb.width && rgb.height == o.rgb.height && rgb.data == o.rgb.data &&
         same_depth(depth, o.depth) && same_flow(flow_to_next, o.flow_to_next) && panoptic == o.panoptic &&
         dynamic.width == o.dynamic.width && dynamic.height == o.dynamic.height && dynamic.scores == o.dynamic.scores;
}

double Sequence::timestamp(std::size_t frame) const {
  if (groundtruth && frame < groundtruth->size()) return groundtruth->timestamps[frame];
  return static_cast<double>(frame) * frame_interval;
}

Sequence load_sequence(const fs::path& path) {
  const fs::path mpath = manifest_path(path);
  const Bytes raw = read_file(mpath);
  const Manifest m(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()), mpath.string());
  const fs::path root = mpath.parent_path();

  Sequence seq;
  const long count = m.number<long>("frames");
  if (count < 1) throw IoError(m.name(), m.get("frames").offset, "frames must be >= 1");
  seq.camera.width = m.number<int>("width");
  seq.camera.height = m.number<int>("height");
  seq.camera.fx = m.number<double>("fx");
  seq.camera.fy = m.number<double>("fy");
  seq.camera.cx = m.number<double>("cx");
  seq.camera.cy = m.number<double>("cy");
  try {
    seq.camera.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(m.name(), 0, e.what());
  }
  if (m.has("split")) seq.split = m.get("split").value;
  if (m.has("frame_interval")) seq.frame_interval = m.number<double>("frame_interval");

  // Frame keys must be contiguous from 0.
  const std::set<std::string> known = {"rgb", "depth", "flow", "panoptic", "dynamic"};
  for (const auto& [key, entry] : m.entries()) {
    if (key.rfind("frame.", 0) != 0 || key == "frame_interval") continue;
    const auto dot = key.find('.', 6);
    long idx = -1;
    const std::string num = key.substr(6, dot == std::string::npos ? std::string::npos : dot - 6);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), idx);
    if (dot == std::string::npos || res.ec != std::errc{} || res.ptr != num.data() + num.size() ||
        !known.count(key.substr(dot + 1)))
      throw IoError(m.name(), entry.offset, "malformed frame key '" + key + "'");
    if (idx < 0 || idx >= count)
      throw IoError(m.name(), entry.offset, "frame index " + std::to_string(idx) + " outside 0.." +
                                                std::to_string(count - 1) + " (gap in frame indices)");
  }

  const auto check_size = [&](const std::string& file, int w, int h) {
    if (w != seq.camera.width || h != seq.camera.height)
      throw IoError(file, 4, "size " + std::to_string(w) + "x" + std::to_string(h) + " does not match manifest");
  };
  for (long f = 0; f < count; ++f) {
    const std::string prefix = "frame." + std::to_string(f) + ".";
    for (const char* required : {"rgb", "depth", "panoptic"})
      if (!m.has(prefix + required))
        throw IoError(m.name(), 0, "missing '" + prefix + required + "' (gap in frame indices)");
    FrameState fs_;
    const fs::path rgb = root / m.get(prefix + "rgb").value;
    fs_.rgb = load_ppm(rgb);
    check_size(rgb.string(), fs_.rgb.width, fs_.rgb.height);
    const fs::path depth = root / m.get(prefix + "depth").value;
    fs_.depth = load_dmap(depth);
    check_size(depth.string(), fs_.depth.width, fs_.depth.height);
    const fs::path pan = root / m.get(prefix + "panoptic").value;
    fs_.panoptic = load_pmap(pan);
    check_size(pan.string(), fs_.panoptic.width, fs_.panoptic.height);
    if (m.has(prefix + "flow")) {
      const fs::path flow = root / m.get(prefix + "flow").value;
      fs_.flow_to_next = load_flo(flow);
      check_size(flow.string(), fs_.flow_to_next.width, fs_.flow_to_next.height);
    } else if (f + 1 < count) {
      throw IoError(m.name(), 0, "missing '" + prefix + "flow' (needed for every frame but the last)");
    }
    if (m.has(prefix + "dynamic")) {
      const fs::path dyn = root / m.get(prefix + "dynamic").value;
      fs_.dynamic = load_dynm(dyn);
      check_size(dyn.string(), fs_.dynamic.width, fs_.dynamic.height);
    }
    seq.frames.push_back(std::move(fs_));
  }
  if (m.has("groundtruth")) {
    Trajectory gt = load_tum(root / m.get("groundtruth").value);
    if (gt.size() != seq.frames.size())
      throw IoError((root / m.get("groundtruth").value).string(), 0, "pose count does not match frame count");
    seq.groundtruth = std::move(gt);
  }
  return seq;
}

void save_sequence(const Sequence& seq, const fs::path& root) {
  if (seq.frames.empty()) throw std::invalid_argument("save_sequence: no frames");
  std::string manifest;
  auto put = [&](const std::string& k, const std::string& v) { manifest += k + "=" + v + "\n"; };
  put("frames", std::to_string(seq.frames.size()));
  put("width", std::to_string(seq.camera.width));
  put("height", std::to_string(seq.camera.height));
  put("fx", format_double(seq.camera.fx));
  put("fy", format_double(seq.camera.fy));
  put("cx", format_double(seq.camera.cx));
  put("cy", format_double(seq.camera.cy));
  put("split", seq.split);
  put("frame_interval", format_double(seq.frame_interval));
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const FrameState& fr = seq.frames[f];
    const std::string stem = frame_stem(f);
    const std::string prefix = "frame." + std::to_string(f) + ".";
    save_ppm(root / "rgb" / (stem + ".ppm"), fr.rgb);
    put(prefix + "rgb", "rgb/" + stem + ".ppm");
    save_dmap(root / "depth" / (stem + ".dmap"), fr.depth);
    put(prefix + "depth", "depth/" + stem + ".dmap");
    if (fr.flow_to_next.size() > 0) {
      save_flo(root / "flow" / (stem + ".flo"), fr.flow_to_next);
      put(prefix + "flow", "flow/" + stem + ".flo");
    }
    save_pmap(root / "gt" / (stem + ".pmap"), fr.panoptic);
    put(prefix + "panoptic", "gt/" + stem + ".pmap");
    if (fr.dynamic.size() > 0) {
      save_dynm(root / "dynamic" / (stem + ".dynm"), fr.dynamic);
      put(prefix + "dynamic", "dynamic/" + stem + ".dynm");
    }
  }
  if (seq.groundtruth) {
    save_tum(root / "groundtruth.tum", *seq.groundtruth);
    put("groundtruth", "groundtruth.tum");
  }
  write_text_atomic(root / kManifestName, manifest);
}

std::vector<PanopticMap> load_panoptic_series(const fs::path& path) {
  if (fs::is_regular_file(path) || fs::exists(path / kManifestName)) {
    const Sequence seq = load_sequence(path);
    std::vector<PanopticMap> maps;
    for (const auto& f : seq.frames) maps.push_back(f.panoptic);
    return maps;
  }
  if (!fs::is_directory(path)) throw IoError(path.string(), 0, "not a directory or manifest");
  // A tracking output directory keeps its maps under panoptic/.
  if (fs::is_directory(path / "panoptic")) return load_panoptic_series(path / "panoptic");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".pmap") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError(path.string(), 0, "no .pmap files found");
  std::vector<PanopticMap> maps;
  for (const auto& f : files) maps.push_back(load_pmap(f));
  return maps;
}

}  // namespace sports
