#pragma once

#include <random>

#include "sports/geometry.hpp"
#include "sports/panoptic.hpp"

namespace sports::test {

inline CameraModel camera(double f, double c, int w, int h) {
  CameraModel cam;
  cam.fx = cam.fy = f;
  cam.cx = cam.cy = c;
  cam.width = w;
  cam.height = h;
  return cam;
}

inline Tangent random_tangent(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Tangent t;
  for (int k = 0; k < 6; ++k) t[k] = n(rng);
  return t;
}

inline Pose random_pose(std::mt19937_64& rng, double scale = 1.0) { return se3_exp(random_tangent(rng, scale)); }

inline double pose_distance(const Pose& a, const Pose& b) {
  return (a.rotation_matrix() - b.rotation_matrix()).norm() + (a.translation() - b.translation()).norm();
}

/// Fills a rectangle [r0, r1) x [c0, c1) with one label.
inline void paint(PanopticMap& m, int r0, int r1, int c0, int c1, std::uint16_t cls, std::uint16_t inst) {
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * m.width + c;
      m.semantic[p] = cls;
      m.instance[p] = inst;
    }
}

}  // namespace sports::test
