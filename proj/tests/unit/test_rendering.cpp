#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "sports/metrics.hpp"
#include "sports/rendering.hpp"
#include "sports/synth.hpp"

namespace sports {
namespace {

CloudPoint point(const Vector3& x, float value) {
  CloudPoint p;
  p.position = x;
  p.descriptor.fill(value);
  return p;
}

TEST(Accumulate, SinglePixelAtPrincipalPoint) {
  const CameraModel cam = test::camera(100, 50, 101, 101);
  RgbImage rgb(101, 101);
  DepthMap d(101, 101);
  d.set(50 * 101 + 50, 10.0);
  const RenderFrame f{&rgb, &d, {}, {}};
  const Pose id = Pose::identity();
  const auto cloud = accumulate_points(std::span(&f, 1), std::span(&id, 1), cam);
  ASSERT_EQ(cloud.points.size(), 1u);
  EXPECT_TRUE(cloud.points[0].position.isApprox(Vector3(0, 0, 10)));
  EXPECT_EQ(cloud.points[0].pixel, 50u * 101 + 50);
}

TEST(Accumulate, StrideAndExclusion) {
  const CameraModel cam = test::camera(4, 1.5, 4, 4);
  RgbImage rgb(4, 4);
  rgb.data.assign(rgb.data.size(), 51);
  DepthMap d(4, 4);
  for (std::size_t p = 0; p < 16; ++p) d.set(p, 1.0);
  const Pose id = Pose::identity();
  RenderFrame f{&rgb, &d, {}, {}};
  const auto strided = accumulate_points(std::span(&f, 1), std::span(&id, 1), cam, 2);
  EXPECT_EQ(strided.points.size(), 4u);
  EXPECT_FLOAT_EQ(strided.points[0].descriptor[0], 0.2f);
  EXPECT_EQ(strided.points[0].descriptor[7], 0.0f);

  std::vector<std::uint8_t> dyn(16, 0);
  dyn[5] = 1;
  f.dynamic = dyn;
  const auto cloud = accumulate_points(std::span(&f, 1), std::span(&id, 1), cam);
  EXPECT_EQ(cloud.points.size(), 15u);
  for (const auto& p : cloud.points) EXPECT_NE(p.pixel, 5u);
  EXPECT_THROW(accumulate_points(std::span(&f, 1), std::span<const Pose>(), cam), std::invalid_argument);
  EXPECT_THROW(accumulate_points(std::span(&f, 1), std::span(&id, 1), cam, 0), std::invalid_argument);
}

TEST(Accumulate, WorldPlacementUsesInversePose) {
  std::mt19937_64 rng(2);
  const CameraModel cam = test::camera(10, 2, 5, 5);
  RgbImage rgb(5, 5);
  DepthMap d(5, 5);
  d.set(7, 3.0);
  const Pose view = test::random_pose(rng);
  const RenderFrame f{&rgb, &d, {}, {}};
  const auto cloud = accumulate_points(std::span(&f, 1), std::span(&view, 1), cam);
  ASSERT_EQ(cloud.points.size(), 1u);
  EXPECT_TRUE((view * cloud.points[0].position).isApprox(backproject(cam, {2, 1}, 3.0), 1e-12));
}

TEST(Rasterize, Examples) {
  const CameraModel cam = test::camera(100, 50, 100, 100);
  DescriptorCloud cloud;
  cloud.points.push_back(point({1, 0, 10}, 0.3f));
  auto pyr = rasterize(cloud, Pose::identity(), cam, 1);
  std::size_t occupied = 0;
  for (std::size_t p = 0; p < pyr[0].point.size(); ++p) occupied += pyr[0].occupied(p);
  EXPECT_EQ(occupied, 1u);
  EXPECT_TRUE(pyr[0].occupied(50 * 100 + 60));

  cloud.points.push_back(point({0, 0, 7}, 0.7f));
  cloud.points.push_back(point({0, 0, 3}, 0.1f));
  cloud.points.push_back(point({0, 0, -3}, 0.9f));
  pyr = rasterize(cloud, Pose::identity(), cam, 3);
  ASSERT_EQ(pyr.size(), 3u);
  EXPECT_EQ(pyr[0].depth[50 * 100 + 50], 3.0);
  EXPECT_EQ(pyr[0].descriptor[50 * 100 + 50][0], 0.1f);
  EXPECT_EQ(pyr[2].width, 25);
  EXPECT_EQ(pyr[2].point[13 * 25 + 13], 2);  // cx = 12.5 rounds up

  EXPECT_TRUE(rasterize({}, Pose::identity(), cam, 2)[1].point == std::vector<std::int64_t>(50 * 50, -1));
  EXPECT_THROW(rasterize(cloud, Pose::identity(), cam, 0), std::invalid_argument);
}

TEST(Rasterize, EqualDepthTieGoesToSmallerIndex) {
  const CameraModel cam = test::camera(10, 5, 10, 10);
  DescriptorCloud cloud;
  cloud.points.push_back(point({0, 0, 2}, 0.2f));
  cloud.points.push_back(point({0.01, 0, 2}, 0.4f));
  const auto pyr = rasterize(cloud, Pose::identity(), cam, 1);
  EXPECT_EQ(pyr[0].point[55], 0);
}

TEST(Rasterize, ZBufferMatchesBruteForce) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> xy(-2, 2), z(-1, 8);
  const CameraModel cam = test::camera(12, 8, 16, 16);
  for (int trial = 0; trial < 20; ++trial) {
    DescriptorCloud cloud;
    for (int i = 0; i < 400; ++i) cloud.points.push_back(point({xy(rng), xy(rng), z(rng)}, 0.5f));
    const Pose view = test::random_pose(rng, 0.2);
    const auto pyr = rasterize(cloud, view, cam, 2);
    for (int k = 0; k < 2; ++k) {
      const CameraModel lc = cam.scaled(k);
      std::vector<double> best(pyr[k].depth.size(), std::numeric_limits<double>::infinity());
      for (const auto& p : cloud.points) {
        const Vector3 x = view * p.position;
        if (x.z() <= kMinProjectionDepth) continue;
        const double u = lc.fx * x.x() / x.z() + lc.cx, v = lc.fy * x.y() / x.z() + lc.cy;
        const double c = std::floor(u + 0.5), r = std::floor(v + 0.5);
        if (c < 0 || r < 0 || c >= lc.width || r >= lc.height) continue;
        auto& b = best[static_cast<std::size_t>(r) * lc.width + static_cast<std::size_t>(c)];
        b = std::min(b, x.z());
      }
      EXPECT_EQ(pyr[k].depth, best);
    }
  }
}

TEST(Rasterize, OrderInvariantUpToRelabelling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> xy(-1, 1), z(1, 4);
  const CameraModel cam = test::camera(10, 6, 12, 12);
  DescriptorCloud cloud;
  for (int i = 0; i < 200; ++i) cloud.points.push_back(point({xy(rng), xy(rng), z(rng)}, static_cast<float>(i)));
  std::vector<std::size_t> perm(cloud.points.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  DescriptorCloud shuffled;
  for (std::size_t i : perm) shuffled.points.push_back(cloud.points[i]);
  const auto a = rasterize(cloud, Pose::identity(), cam, 2), b = rasterize(shuffled, Pose::identity(), cam, 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(a[k].depth, b[k].depth);
    EXPECT_EQ(a[k].descriptor, b[k].descriptor);  // continuous depths: no exact ties
  }
}

TEST(Composite, Examples) {
  RasterLevel full{2, 2, std::vector<Descriptor>(4), std::vector<double>(4, 1.0), {0, 1, 2, 3}};
  for (int i = 0; i < 4; ++i) full.descriptor[i].fill(0.25f * i);
  Composite c = composite({full});
  EXPECT_EQ(c.image.data, (std::vector<std::uint8_t>{0, 0, 0, 64, 64, 64, 128, 128, 128, 191, 191, 191}));
  EXPECT_EQ(c.coverage, std::vector<std::uint8_t>(4, 1));

  RasterLevel empty{2, 2, std::vector<Descriptor>(4), std::vector<double>(4, 1e300), std::vector<std::int64_t>(4, -1)};
  RasterLevel coarse{1, 1, std::vector<Descriptor>(1), {1.0}, {0}};
  coarse.descriptor[0].fill(1.0f);
  c = composite({empty, coarse});
  EXPECT_EQ(c.image.data, std::vector<std::uint8_t>(12, 255));
  EXPECT_EQ(c.coverage, std::vector<std::uint8_t>(4, 1));

  c = composite({empty});
  EXPECT_EQ(c.image.data, std::vector<std::uint8_t>(12, 0));
  EXPECT_EQ(c.coverage, std::vector<std::uint8_t>(4, 0));
  EXPECT_EQ(composite({}).image.data.size(), 0u);
}

TEST(HardSamples, Examples) {
  const std::vector<SampleScore> q{{0, 3}, {1, 1}, {2, 2}};
  EXPECT_EQ(select_hard_samples(q, 2), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(select_hard_samples(q, 3).size(), 3u);
  const std::vector<SampleScore> flat{{4, 1}, {2, 1}, {9, 1}};
  EXPECT_EQ(select_hard_samples(flat, 1), (std::vector<std::uint32_t>{2}));
  EXPECT_THROW(select_hard_samples(q, 4), std::invalid_argument);
}

TEST(QualityScore, MeanAbsoluteError) {
  RgbImage a(2, 1), b(2, 1);
  a.data = {10, 10, 10, 0, 0, 0};
  b.data = {13, 10, 10, 0, 0, 6};
  EXPECT_DOUBLE_EQ(image_quality_score(a, b), 9.0 / 6.0);
  const std::vector<std::uint8_t> mask{1, 0};
  EXPECT_DOUBLE_EQ(image_quality_score(a, b, mask), 1.0);
  EXPECT_THROW(image_quality_score(a, RgbImage(1, 1)), std::invalid_argument);
}

TEST(SelfRender, SourceFrameCloudReproducesRgb) {
  SynthConfig c;
  c.frames = 2;
  c.seed = 4;
  const SynthScene s = synth_generate(c);
  const auto& f = s.sequence.frames[1];
  const RenderFrame rf{&f.rgb, &f.depth, s.moving[1], {}};
  const auto cloud = accumulate_points(std::span(&rf, 1), std::span(&s.poses[1], 1), s.sequence.camera);
  const Composite img = composite(rasterize(cloud, s.poses[1], s.sequence.camera, 4));
  std::vector<std::uint8_t> mask(img.coverage.size());
  for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = img.coverage[p] && !s.moving[1][p];
  EXPECT_GT(psnr(img.image, f.rgb, 255.0, mask), 40.0);
}

}  // namespace
}  // namespace sports
