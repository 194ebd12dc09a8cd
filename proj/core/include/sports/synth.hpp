#pragma once

// Ray-cast synthetic scenes with analytically exact depth, panoptic labels,
// flow and poses.
//
// The scene is a closed room (floor, ceiling, walls) holding three cuboids:
// a moving car whose motion scores say "dynamic", a moving person whose scores
// are ambiguous, and a parked car. The camera drives forward with a small
// lateral sway and yaw, starting at the identity pose.

#include <cstdint>
#include <string>
#include <vector>

#include "sports/geometry.hpp"
#include "sports/sequence.hpp"

namespace sports {

namespace synth_class {
inline constexpr std::uint16_t kFloor = 1;
inline constexpr std::uint16_t kWall = 2;
inline constexpr std::uint16_t kCeiling = 3;
inline constexpr std::uint16_t kCar = 10;
inline constexpr std::uint16_t kPerson = 11;
}  // namespace synth_class

struct SynthConfig {
  int frames = 8;
  int width = 64;
  int height = 64;
  double focal = 0.0;  // pixels; 0 selects 0.9375 * width
  std::uint64_t seed = 0;
  bool moving_objects = true;  // false freezes both movers and marks them static
  std::string split = "test";
};

struct SynthScene {
  Sequence sequence;              // groundtruth holds camera -> world poses
  std::vector<Pose> poses;        // world -> camera
  std::vector<std::vector<std::uint8_t>> moving;  // per frame, 1 on pixels of moving objects
};

/// Deterministic in (config, seed). Throws std::invalid_argument for zero
/// frames or images smaller than 4 x 4.
SynthScene synth_generate(const SynthConfig& config);

}  // namespace sports
