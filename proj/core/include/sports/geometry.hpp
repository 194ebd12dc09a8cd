#pragma once

// SE(3) pose algebra, pinhole camera, depth maps and dense correspondence
// fields.
//
// Poses follow the frame-graph convention: a Pose maps points from the world
// frame into a camera frame, so the relative motion between frames i and j is
// xi_j * inverse(xi_i). Trajectory files store the inverse (camera-to-world).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sports {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Tangent = Eigen::Matrix<double, 6, 1>;  // (omega_x, omega_y, omega_z, v_x, v_y, v_z)

/// Points with camera-frame depth at or below this are never projected.
inline constexpr double kMinProjectionDepth = 1e-4;
/// Depths below this after a state update are marked invalid.
inline constexpr double kMinValidDepth = 1e-4;

Matrix3 skew(const Vector3& v);

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws std::invalid_argument when the intrinsics violate the model.
  void validate() const;
  /// Intrinsics for an image downsampled by 2^level (all four scaled).
  CameraModel scaled(int level) const;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Quaterniond& rotation, const Vector3& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Vector3& t) {
    return {Eigen::Quaterniond::Identity(), t};
  }

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Pose inverse() const;
  Vector3 operator*(const Vector3& p) const { return rotation_ * p + translation_; }
  Pose operator*(const Pose& other) const;

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Vector3 translation_ = Vector3::Zero();
};

/// Exponential map se(3) -> SE(3). Throws on non-finite input.
Pose se3_exp(const Tangent& delta);
/// Logarithm SE(3) -> se(3); inverse of se3_exp for rotation angle below pi.
Tangent se3_log(const Pose& pose);

/// xi_j * inverse(xi_i): maps camera-i coordinates into camera j.
Pose pose_relative(const Pose& xi_i, const Pose& xi_j);

std::optional<Vector2> project(const CameraModel& cam, const Vector3& point);
/// Throws std::invalid_argument for depth <= 0.
Vector3 backproject(const CameraModel& cam, const Vector2& pixel, double depth);

struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h);

  std::size_t size() const { return depth.size(); }
  bool is_valid(std::size_t idx) const { return valid[idx] != 0; }
  void set(std::size_t idx, double d);
  void invalidate(std::size_t idx);
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

/// Canonical pixel grid: entry (r, c) holds (c, r).
std::vector<Vector2> canonical_grid(int width, int height);

struct CorrespondenceField {
  int width = 0;
  int height = 0;
  std::vector<Vector2> coords;
  std::vector<std::uint8_t> visible;
};

/// u_ij = project(xi_ij * backproject(u_i, D_i)) for every pixel of frame i.
CorrespondenceField correspondence_field(const CameraModel& cam, const Pose& xi_ij,
                                         const DepthMap& depth_i);

/// Per-frame optimisation state: pose plus per-pixel depth and dynamic-mask
/// scores. `mask` is either empty or holds two scores per pixel.
struct FrameVariables {
  Pose pose;
  DepthMap depth;
  std::vector<double> mask;
};

struct FrameIncrement {
  Tangent pose = Tangent::Zero();
  std::vector<double> depth;  // empty means zero
  std::vector<double> mask;   // empty means zero
};

/// Left-multiplicative pose update, additive depth/mask update. Depths that
/// fall below kMinValidDepth become invalid.
FrameVariables retract_state(const FrameVariables& state, const FrameIncrement& delta);

}  // namespace sports
