#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "helpers.hpp"
#include "sports/config.hpp"
#include "sports/io.hpp"
#include "sports/sequence.hpp"
#include "sports/synth.hpp"

namespace sports {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("sports_io_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

DepthMap sample_depth() {
  DepthMap d(5, 3);
  for (std::size_t i = 0; i < d.size(); ++i) d.set(i, 0.5 + 0.1 * static_cast<double>(i));
  d.invalidate(4);
  return d;
}

PanopticMap sample_pmap() {
  PanopticMap m(6, 4);
  test::paint(m, 0, 2, 0, 6, 2, 0);
  test::paint(m, 2, 4, 1, 3, 10, 9999);
  m.unknown[5] = 1;
  return m;
}

FlowField sample_flow() {
  FlowField f(4, 3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.flow[i] = Vector2(0.25 * static_cast<double>(i), -1.5);
    f.valid[i] = 1;
  }
  f.valid[7] = 0;
  return f;
}

RgbImage sample_rgb() {
  RgbImage im(3, 2);
  for (std::size_t i = 0; i < im.data.size(); ++i) im.data[i] = static_cast<std::uint8_t>(i * 13);
  return im;
}

TEST(Io, DmapRoundTrip) {
  const Bytes a = encode_dmap(sample_depth());
  const DepthMap d = decode_dmap(a, "x.dmap");
  EXPECT_EQ(d.valid, sample_depth().valid);
  EXPECT_EQ(encode_dmap(d), a);
}

TEST(Io, PmapRoundTrip) {
  const Bytes a = encode_pmap(sample_pmap());
  EXPECT_EQ(decode_pmap(a, "x.pmap"), sample_pmap());
  EXPECT_EQ(encode_pmap(decode_pmap(a, "x.pmap")), a);
}

TEST(Io, PmapRejectsOversizedInstance) {
  PanopticMap m(1, 1);
  m.semantic[0] = 1;
  m.instance[0] = 10000;
  EXPECT_THROW(encode_pmap(m), std::invalid_argument);
}

TEST(Io, FloRoundTripAndUnknownSentinel) {
  const Bytes a = encode_flo(sample_flow());
  const FlowField f = decode_flo(a, "x.flo");
  EXPECT_EQ(f.valid, sample_flow().valid);
  EXPECT_EQ(encode_flo(f), a);
  // Header is 12 bytes, then (u, v) float pairs.
  float u = 0;
  std::memcpy(&u, a.data() + 12 + 7 * 8, 4);
  EXPECT_FLOAT_EQ(u, 1e10f);
}

TEST(Io, PpmRoundTrip) {
  const Bytes a = encode_ppm(sample_rgb());
  EXPECT_EQ(decode_ppm(a, "x.ppm").data, sample_rgb().data);
  EXPECT_EQ(std::string(a.begin(), a.begin() + 2), "P6");
}

TEST(Io, DynmFeatAgfwRoundTrip) {
  DynamicMask m(3, 2);
  // Stored as float32: values that are exact in float survive unchanged.
  for (std::size_t i = 0; i < m.scores.size(); ++i) m.scores[i] = 0.25 * static_cast<double>(i) - 1.0;
  const Bytes dm = encode_dynm(m);
  EXPECT_EQ(decode_dynm(dm, "x").scores, m.scores);
  EXPECT_EQ(encode_dynm(decode_dynm(dm, "x")), dm);

  FeatureMap f(3, 2, 4);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<float>(std::sin(static_cast<double>(i)));
  const Bytes fe = encode_feat(f);
  EXPECT_EQ(decode_feat(fe, "x").data, f.data);
  EXPECT_EQ(encode_feat(decode_feat(fe, "x")), fe);

  const FusionModel model = FusionModel::seeded(2, 3, 3, 42);
  const Bytes ag = encode_agfw(model);
  EXPECT_EQ(encode_agfw(decode_agfw(ag, "x")), ag);
}

TEST(Io, PlyRoundTrip) {
  DescriptorCloud c;
  for (int i = 0; i < 3; ++i) {
    CloudPoint p;
    p.position = Vector3(0.1f * i, -2.0f / 3.0f, 1e-7f * i).cast<double>();
    p.descriptor[0] = 0.2f * static_cast<float>(i);
    p.descriptor[7] = 1.0f / 3.0f;
    c.points.push_back(p);
  }
  const std::string a = encode_ply(c);
  const DescriptorCloud d = decode_ply(a, "x.ply");
  ASSERT_EQ(d.points.size(), 3u);
  EXPECT_EQ(d.points[1].position, c.points[1].position);
  EXPECT_EQ(d.points[2].descriptor, c.points[2].descriptor);
  EXPECT_EQ(encode_ply(d), a);
}

TEST(Io, TumIsBitExact) {
  std::mt19937_64 rng(9);
  Trajectory t;
  for (int i = 0; i < 10; ++i) {
    t.timestamps.push_back(1305031102.175304 + 0.0333 * i);
    t.poses.push_back(test::random_pose(rng, 1.0));
  }
  const std::string a = encode_tum(t);
  const Trajectory b = decode_tum(a, "x.tum");
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(b.timestamps[i], t.timestamps[i]);
    EXPECT_EQ(b.poses[i].translation(), t.poses[i].translation());
  }
  EXPECT_EQ(encode_tum(b), a);
}

TEST(Io, TumErrorsCarryOffset) {
  const std::string text = "# header\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0\n";
  try {
    decode_tum(text, "bad.tum");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.file(), "bad.tum");
    EXPECT_EQ(e.offset(), 25u);
    EXPECT_NE(std::string(e.what()).find("bad.tum: byte 25"), std::string::npos);
  }
}

TEST(Io, TruncatedBinaryFilesNameFileAndOffset) {
  const std::vector<std::pair<Bytes, std::function<void(std::span<const std::uint8_t>)>>> cases = {
      {encode_dmap(sample_depth()), [](auto b) { decode_dmap(b, "t.bin"); }},
      {encode_pmap(sample_pmap()), [](auto b) { decode_pmap(b, "t.bin"); }},
      {encode_flo(sample_flow()), [](auto b) { decode_flo(b, "t.bin"); }},
      {encode_ppm(sample_rgb()), [](auto b) { decode_ppm(b, "t.bin"); }},
  };
  for (const auto& [bytes, decode] : cases) {
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() - 1}) {
      const std::span<const std::uint8_t> part(bytes.data(), cut);
      try {
        decode(part);
        ADD_FAILURE() << "cut " << cut;
      } catch (const IoError& e) {
        EXPECT_EQ(e.file(), "t.bin");
        EXPECT_LE(e.offset(), cut);
        EXPECT_NE(std::string(e.what()).find("t.bin: byte "), std::string::npos);
      }
    }
  }
}

TEST(Io, AtomicFileRoundTrip) {
  TempDir tmp;
  const fs::path p = tmp.path() / "d.dmap";
  save_dmap(p, sample_depth());
  EXPECT_EQ(encode_dmap(load_dmap(p)), encode_dmap(sample_depth()));
  EXPECT_THROW(load_dmap(tmp.path() / "missing.dmap"), IoError);
  for (const auto& e : fs::directory_iterator(tmp.path())) EXPECT_EQ(e.path().filename(), "d.dmap");
}

TEST(Io, ShortestNumberText) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(2.0 / 3.0)), 2.0 / 3.0);
}

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.eta, 10.0);
  EXPECT_EQ(c.tau, 0.5);
  EXPECT_EQ(c.window, 2);
  EXPECT_EQ(c.alpha1, 0.7);
  EXPECT_EQ(c.alpha2, 0.3);
  EXPECT_EQ(c.pyramid_levels, 4);
  EXPECT_EQ(c.fusion_kernel, 3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(parse_config("bogus = 1\n", "c"), IoError);
  EXPECT_THROW(parse_config("eta = 1\neta = 2\n", "c"), IoError);
  EXPECT_THROW(parse_config("eta = abc\n", "c"), IoError);
  EXPECT_THROW(parse_config("eta\n", "c"), IoError);
  try {
    parse_config("# comment\n\ntau = x\n", "c.cfg");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.offset(), 11u);
  }
}

TEST(Config, ParseAndFormatRoundTrip) {
  const RunConfig c = parse_config("eta = 4.5  # comment\nwindow=3\nuse_warped_previous = false\n", "c");
  EXPECT_EQ(c.eta, 4.5);
  EXPECT_EQ(c.window, 3);
  EXPECT_FALSE(c.use_warped_previous);
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text, "c")), text);
}

TEST(Config, ValidateRejectsOutOfRange) {
  RunConfig c;
  c.tau = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.fusion_kernel = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.alpha2 = 0.8;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Sequence, SaveLoadRoundTrip) {
  TempDir tmp;
  SynthConfig sc;
  sc.frames = 3;
  sc.width = 16;
  sc.height = 12;
  const SynthScene scene = synth_generate(sc);
  save_sequence(scene.sequence, tmp.path());
  const Sequence back = load_sequence(tmp.path());
  ASSERT_EQ(back.frames.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(back.frames[i] == scene.sequence.frames[i]) << i;
  ASSERT_TRUE(back.groundtruth.has_value());
  EXPECT_EQ(encode_tum(*back.groundtruth), encode_tum(*scene.sequence.groundtruth));
  EXPECT_EQ(load_panoptic_series(tmp.path()).size(), 3u);
}

TEST(Sequence, ManifestGapIsAnError) {
  TempDir tmp;
  SynthConfig sc;
  sc.frames = 3;
  sc.width = 8;
  sc.height = 8;
  save_sequence(synth_generate(sc).sequence, tmp.path());
  const fs::path m = tmp.path() / kManifestName;
  std::string text;
  {
    const Bytes b = read_file(m);
    text.assign(b.begin(), b.end());
  }
  std::string filtered;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos);
    if (line.rfind("frame.1.", 0) != 0 && line.rfind(frame_stem(1), 0) != 0) filtered += line + "\n";
    pos = end + 1;
  }
  ASSERT_NE(filtered, text);
  write_text_atomic(m, filtered);
  EXPECT_THROW(load_sequence(tmp.path()), IoError);
}

TEST(Synth, Deterministic) {
  SynthConfig sc;
  sc.frames = 3;
  sc.width = 24;
  sc.height = 16;
  sc.seed = 7;
  const SynthScene a = synth_generate(sc), b = synth_generate(sc);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(a.sequence.frames[i] == b.sequence.frames[i]);
  EXPECT_EQ(encode_tum(*a.sequence.groundtruth), encode_tum(*b.sequence.groundtruth));
}

TEST(Synth, StaticFlowMatchesEpipolarGeometry) {
  SynthConfig sc;
  sc.frames = 4;
  sc.width = 48;
  sc.height = 32;
  sc.moving_objects = false;
  const SynthScene s = synth_generate(sc);
  const CameraModel& cam = s.sequence.camera;
  for (std::size_t t = 0; t + 1 < s.poses.size(); ++t) {
    const auto& fr = s.sequence.frames[t];
    const auto cf = correspondence_field(cam, pose_relative(s.poses[t], s.poses[t + 1]), fr.depth);
    const auto grid = canonical_grid(cam.width, cam.height);
    std::size_t agree = 0;
    for (std::size_t p = 0; p < grid.size(); ++p)
      if (fr.flow_to_next.valid[p] && cf.visible[p] &&
          (cf.coords[p] - grid[p] - fr.flow_to_next.flow[p]).norm() < 1e-6)
        ++agree;
    EXPECT_GE(static_cast<double>(agree), 0.99 * static_cast<double>(grid.size())) << t;
  }
}

TEST(Synth, MovingObjectFlowDeviatesFromEpipolarFlow) {
  SynthConfig sc;
  sc.frames = 4;
  sc.width = 64;
  sc.height = 48;
  const SynthScene s = synth_generate(sc);
  const CameraModel& cam = s.sequence.camera;
  std::size_t moving = 0, differ = 0;
  for (std::size_t t = 0; t + 1 < s.poses.size(); ++t) {
    const auto& fr = s.sequence.frames[t];
    const auto cf = correspondence_field(cam, pose_relative(s.poses[t], s.poses[t + 1]), fr.depth);
    const auto grid = canonical_grid(cam.width, cam.height);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      if (!s.moving[t][p] || !fr.flow_to_next.valid[p]) continue;
      ++moving;
      if (!cf.visible[p] || (cf.coords[p] - grid[p] - fr.flow_to_next.flow[p]).norm() > 1e-3) ++differ;
    }
  }
  ASSERT_GT(moving, 0u);
  EXPECT_GT(static_cast<double>(differ), 0.9 * static_cast<double>(moving));
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig sc;
  sc.frames = 0;
  EXPECT_THROW(synth_generate(sc), std::invalid_argument);
  sc.frames = 2;
  sc.width = 3;
  EXPECT_THROW(synth_generate(sc), std::invalid_argument);
}

}  // namespace
}  // namespace sports
