#include "sports/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sports {
namespace {

constexpr double kForwardSpeed = 0.12;  // scene units per frame
constexpr double kHitEpsilon = 1e-9;

// Room interior, camera coordinates convention (y points down, so the floor
// sits at +y).
constexpr std::array<double, 3> kRoomLo = {-2.5, -1.8, -3.0};
constexpr std::array<double, 3> kRoomHi = {2.5, 1.2, 14.0};

struct Box {
  Vector3 lo;
  Vector3 hi;
  Vector3 velocity;  // per frame
  std::uint16_t cls = 0;
  std::uint16_t inst = 0;
  bool moving = false;
  double logit = -1.5;  // mean dynamic-minus-static score
  int texture = 0;
};

struct Wave {
  Vector3 k;  // cycles per scene unit
  double phase = 0.0;
};

struct Material {
  std::array<double, 3> base{};
  std::array<Wave, 3> waves{};
};

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  std::uint16_t cls = 0;
  std::uint16_t inst = 0;
  int box = -1;
  int texture = 0;
};

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

/// Entry distance of a ray into an axis-aligned box, or +inf.
double ray_box(const Vector3& o, const Vector3& d, const Vector3& lo, const Vector3& hi) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t1 < t0 || t0 <= kHitEpsilon) return std::numeric_limits<double>::infinity();
  return t0;
}

Hit cast(const Vector3& o, const Vector3& d, const std::vector<Box>& boxes, int frame) {
  Hit hit;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) continue;
    const double bound = d[a] > 0 ? kRoomHi[a] : kRoomLo[a];
    const double s = (bound - o[a]) / d[a];
    if (s > kHitEpsilon && s < hit.s) {
      hit.s = s;
      if (a == 1) {
        hit.cls = d[a] > 0 ? synth_class::kFloor : synth_class::kCeiling;
        hit.texture = d[a] > 0 ? 0 : 2;
      } else {
        hit.cls = synth_class::kWall;
        hit.texture = 1;
      }
    }
  }
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const Vector3 shift = boxes[b].velocity * frame;
    const double s = ray_box(o, d, boxes[b].lo + shift, boxes[b].hi + shift);
    if (s < hit.s) {
      hit.s = s;
      hit.cls = boxes[b].cls;
      hit.inst = boxes[b].inst;
      hit.box = static_cast<int>(b);
      hit.texture = boxes[b].texture;
    }
  }
  return hit;
}

double shade(const Material& m, const Vector3& p, int ch) {
  const Wave& w = m.waves[ch];
  const double v = m.base[ch] + 0.1 * std::sin(2.0 * std::numbers::pi * w.k.dot(p) + w.phase);
  return std::clamp(v, 0.0, 1.0);
}

Pose camera_to_world(int t, double sway, double yaw_amp) {
  const Vector3 position(sway * std::sin(0.35 * t), 0.03 * std::sin(0.5 * t), kForwardSpeed * t);
  const Eigen::Quaterniond q(Eigen::AngleAxisd(yaw_amp * std::sin(0.3 * t), Vector3::UnitY()) *
                             Eigen::AngleAxisd(0.01 * std::sin(0.45 * t), Vector3::UnitX()));
  return {q, position};
}

}  // namespace

SynthScene synth_generate(const SynthConfig& config) {
  if (config.frames < 1) throw std::invalid_argument("synth_generate: frames must be >= 1");
  if (config.width < 4 || config.height < 4) throw std::invalid_argument("synth_generate: image must be at least 4x4");
  if (config.focal < 0.0) throw std::invalid_argument("synth_generate: focal must be >= 0");

  std::mt19937_64 rng(config.seed);
  CameraModel cam;
  cam.width = config.width;
  cam.height = config.height;
  cam.fx = cam.fy = config.focal > 0.0 ? config.focal : 0.9375 * config.width;
  cam.cx = 0.5 * config.width;
  cam.cy = 0.5 * config.height;
  cam.validate();

  const double sway = uniform(rng, 0.08, 0.15);
  const double yaw_amp = uniform(rng, 0.02, 0.05);

  std::vector<Box> boxes(3);
  {
    Box& car = boxes[0];
    const double x0 = uniform(rng, -1.7, -1.5);
    const double z0 = uniform(rng, 3.0, 3.3);
    car.lo = Vector3(x0, -0.1, z0);
    car.hi = Vector3(x0 + uniform(rng, 1.65, 1.85), 1.2, z0 + 1.2);
    car.velocity = Vector3(uniform(rng, 0.04, 0.05), 0.0, 0.08);
    car.cls = synth_class::kCar;
    car.inst = 1;
    car.logit = 1.5;
    car.texture = 3;

    Box& person = boxes[1];
    const double px = uniform(rng, 1.3, 1.45);
    const double pz = uniform(rng, 5.3, 5.7);
    person.lo = Vector3(px, -0.6, pz);
    person.hi = Vector3(px + 0.45, 1.2, pz + 0.4);
    person.velocity = Vector3(uniform(rng, 0.01, 0.02), 0.0, 0.02);
    person.cls = synth_class::kPerson;
    person.inst = 1;
    person.logit = -0.4;
    person.texture = 4;

    Box& parked = boxes[2];
    const double qz = uniform(rng, 10.5, 11.5);
    parked.lo = Vector3(1.6, 0.4, qz);
    parked.hi = Vector3(2.45, 1.2, qz + 2.0);
    parked.velocity = Vector3::Zero();
    parked.cls = synth_class::kCar;
    parked.inst = 2;
    parked.logit = -1.5;
    parked.texture = 5;
  }
  for (auto& b : boxes) {
    b.moving = config.moving_objects && !b.velocity.isZero();
    if (!config.moving_objects) {
      b.velocity.setZero();
      b.logit = -1.5;
    }
  }

  const std::array<std::array<double, 3>, 6> bases = {{{0.45, 0.40, 0.35},
                                                       {0.62, 0.60, 0.52},
                                                       {0.78, 0.78, 0.80},
                                                       {0.72, 0.22, 0.20},
                                                       {0.22, 0.35, 0.70},
                                                       {0.25, 0.58, 0.30}}};
  std::array<Material, 6> materials;
  for (std::size_t m = 0; m < materials.size(); ++m) {
    materials[m].base = bases[m];
    for (auto& w : materials[m].waves) {
      const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double phi = uniform(rng, -0.5, 0.5);
      w.k = 0.3 * Vector3(std::cos(theta) * std::cos(phi), std::sin(phi), std::sin(theta) * std::cos(phi));
      w.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
  }

  SynthScene scene;
  Sequence& seq = scene.sequence;
  seq.camera = cam;
  seq.split = config.split;
  Trajectory gt;
  for (int t = 0; t < config.frames; ++t) {
    const Pose cw = camera_to_world(t, sway, yaw_amp);
    gt.timestamps.push_back(0.1 * t);
    gt.poses.push_back(cw);
    scene.poses.push_back(cw.inverse());
  }

  std::normal_distribution<double> score_noise(0.0, 0.6);
  const std::size_t n = cam.pixel_count();
  for (int t = 0; t < config.frames; ++t) {
    FrameState fr;
    fr.rgb = RgbImage(cam.width, cam.height);
    fr.depth = DepthMap(cam.width, cam.height);
    fr.panoptic = PanopticMap(cam.width, cam.height);
    fr.dynamic = DynamicMask(cam.width, cam.height);
    const bool has_next = t + 1 < config.frames;
    if (has_next) fr.flow_to_next = FlowField(cam.width, cam.height);
    std::vector<std::uint8_t> moving(n, 0);

    const Pose& cw = gt.poses[t];
    const Matrix3 r_cw = cw.rotation_matrix();
    const Vector3 origin = cw.translation();
    for (int r = 0; r < cam.height; ++r) {
      for (int c = 0; c < cam.width; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r) * cam.width + c;
        // Camera-frame ray with unit z, so the ray parameter is the depth.
        const Vector3 ray((c - cam.cx) / cam.fx, (r - cam.cy) / cam.fy, 1.0);
        const Vector3 dir = r_cw * ray;
        const Hit hit = cast(origin, dir, boxes, t);
        const Vector3 x = origin + hit.s * dir;
        fr.depth.set(idx, static_cast<float>(hit.s));
        fr.panoptic.semantic[idx] = hit.cls;
        fr.panoptic.instance[idx] = hit.inst;

        Vector3 motion = Vector3::Zero();
        Vector3 local = x;
        double logit = -1.5;
        if (hit.box >= 0) {
          const Box& b = boxes[hit.box];
          motion = b.velocity;
          local = x - b.velocity * t;
          logit = b.logit;
          moving[idx] = b.moving ? 1 : 0;
        }
        for (int ch = 0; ch < 3; ++ch) fr.rgb.at(r, c, ch) = to_u8(shade(materials[hit.texture], local, ch));
        fr.dynamic.scores[2 * idx] = 0.0;
        fr.dynamic.scores[2 * idx + 1] = static_cast<float>(logit + score_noise(rng));

        if (has_next) {
          const auto uv = project(cam, scene.poses[t + 1] * (x + motion));
          if (uv) {
            fr.flow_to_next.flow[idx] = Vector2(static_cast<float>(uv->x() - c), static_cast<float>(uv->y() - r));
            fr.flow_to_next.valid[idx] = 1;
          }
        }
      }
    }
    seq.frames.push_back(std::move(fr));
    scene.moving.push_back(std::move(moving));
  }
  seq.groundtruth = std::move(gt);
  return scene;
}

}  // namespace sports
