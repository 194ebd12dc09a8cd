#include "sports/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sports {
namespace {

constexpr double kSmallAngle = 1e-6;

Eigen::Quaterniond so3_exp(const Vector3& omega) {
  const double theta = omega.norm();
  double w = 0.0;
  double k = 0.0;  // sin(theta/2) / theta
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    k = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  Eigen::Quaterniond q(w, k * omega.x(), k * omega.y(), k * omega.z());
  q.normalize();
  return q;
}

Vector3 so3_log(Eigen::Quaterniond q) {
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vector3 vec = q.vec();
  const double n = vec.norm();
  const double w = q.w();
  if (n < kSmallAngle) {
    // theta ~= 2 n; atan(n/w)/n ~= (1 - n^2 / (3 w^2)) / w
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * vec;
  }
  const double theta = 2.0 * std::atan2(n, w);
  return (theta / n) * vec;
}

// Left Jacobian V of SO(3), maps the translational tangent to t.
Matrix3 left_jacobian(const Vector3& omega) {
  const double theta = omega.norm();
  const Matrix3 k = skew(omega);
  if (theta < kSmallAngle) return Matrix3::Identity() + 0.5 * k + k * k / 6.0;
  const double t2 = theta * theta;
  return Matrix3::Identity() + ((1.0 - std::cos(theta)) / t2) * k +
         ((theta - std::sin(theta)) / (t2 * theta)) * k * k;
}

Matrix3 left_jacobian_inverse(const Vector3& omega) {
  const double theta = omega.norm();
  const Matrix3 k = skew(omega);
  if (theta < kSmallAngle) return Matrix3::Identity() - 0.5 * k + k * k / 12.0;
  const double t2 = theta * theta;
  const double c =
      (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / t2;
  return Matrix3::Identity() - 0.5 * k + c * k * k;
}

}  // namespace

Matrix3 skew(const Vector3& v) {
  Matrix3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw std::invalid_argument("camera: principal point outside the image");
}

CameraModel CameraModel::scaled(int level) const {
  const double s = std::ldexp(1.0, -level);
  CameraModel out = *this;
  out.fx *= s;
  out.fy *= s;
  out.cx *= s;
  out.cy *= s;
  out.width = (width + (1 << level) - 1) >> level;
  out.height = (height + (1 << level) - 1) >> level;
  return out;
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Vector3& translation)
    : rotation_(std::abs(rotation.squaredNorm() - 1.0) > 1e-15 ? rotation.normalized() : rotation),
      translation_(translation) {}

Pose Pose::inverse() const {
  const Eigen::Quaterniond qi = rotation_.conjugate();
  return {qi, -(qi * translation_)};
}

Pose Pose::operator*(const Pose& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

Pose se3_exp(const Tangent& delta) {
  if (!delta.allFinite()) throw std::invalid_argument("se3_exp: non-finite tangent");
  const Vector3 omega = delta.head<3>();
  const Vector3 v = delta.tail<3>();
  return {so3_exp(omega), left_jacobian(omega) * v};
}

Tangent se3_log(const Pose& pose) {
  const Vector3 omega = so3_log(pose.rotation());
  Tangent out;
  out.head<3>() = omega;
  out.tail<3>() = left_jacobian_inverse(omega) * pose.translation();
  return out;
}

Pose pose_relative(const Pose& xi_i, const Pose& xi_j) { return xi_j * xi_i.inverse(); }

std::optional<Vector2> project(const CameraModel& cam, const Vector3& point) {
  if (!(point.z() > kMinProjectionDepth) || !point.allFinite()) return std::nullopt;
  return Vector2(cam.fx * point.x() / point.z() + cam.cx,
                 cam.fy * point.y() / point.z() + cam.cy);
}

Vector3 backproject(const CameraModel& cam, const Vector2& pixel, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw std::invalid_argument("backproject: depth must be positive and finite");
  return {(pixel.x() - cam.cx) / cam.fx * depth, (pixel.y() - cam.cy) / cam.fy * depth, depth};
}

DepthMap::DepthMap(int w, int h)
    : width(w),
      height(h),
      depth(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN()),
      valid(static_cast<std::size_t>(w) * h, 0) {
  if (w < 0 || h < 0) throw std::invalid_argument("DepthMap: negative size");
}

void DepthMap::set(std::size_t idx, double d) {
  if (std::isfinite(d) && d > 0.0) {
    depth[idx] = d;
    valid[idx] = 1;
  } else {
    invalidate(idx);
  }
}

void DepthMap::invalidate(std::size_t idx) {
  depth[idx] = std::numeric_limits<double>::quiet_NaN();
  valid[idx] = 0;
}

std::vector<Vector2> canonical_grid(int width, int height) {
  std::vector<Vector2> grid;
  grid.reserve(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) grid.emplace_back(c, r);
  return grid;
}

CorrespondenceField correspondence_field(const CameraModel& cam, const Pose& xi_ij,
                                         const DepthMap& depth_i) {
  if (!depth_i.same_shape(cam.width, cam.height))
    throw std::invalid_argument("correspondence_field: depth map does not match camera");
  CorrespondenceField out;
  out.width = cam.width;
  out.height = cam.height;
  out.coords = canonical_grid(cam.width, cam.height);
  out.visible.assign(out.coords.size(), 0);
  const bool is_identity = xi_ij.translation().isZero(0.0) &&
                           xi_ij.rotation().vec().isZero(0.0);
  for (std::size_t idx = 0; idx < out.coords.size(); ++idx) {
    if (!depth_i.is_valid(idx)) continue;
    if (is_identity) {
      // Exact: the round trip through 3D would only add rounding noise.
      out.visible[idx] = 1;
      continue;
    }
    const Vector3 p = xi_ij * backproject(cam, out.coords[idx], depth_i.depth[idx]);
    if (auto uv = project(cam, p)) {
      out.coords[idx] = *uv;
      out.visible[idx] = 1;
    }
  }
  return out;
}

FrameVariables retract_state(const FrameVariables& state, const FrameIncrement& delta) {
  const std::size_t n = state.depth.size();
  if (!delta.depth.empty() && delta.depth.size() != n)
    throw std::invalid_argument("retract_state: depth increment shape mismatch");
  if (!delta.mask.empty() && delta.mask.size() != state.mask.size())
    throw std::invalid_argument("retract_state: mask increment shape mismatch");
  if (!state.mask.empty() && state.mask.size() != 2 * n)
    throw std::invalid_argument("retract_state: mask must hold two scores per pixel");

  FrameVariables out;
  out.pose = se3_exp(delta.pose) * state.pose;
  out.depth = state.depth;
  if (!delta.depth.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!state.depth.is_valid(i) || delta.depth[i] == 0.0) continue;
      const double d = state.depth.depth[i] + delta.depth[i];
      if (d < kMinValidDepth || !std::isfinite(d))
        out.depth.invalidate(i);
      else
        out.depth.depth[i] = d;
    }
  }
  out.mask = state.mask;
  for (std::size_t i = 0; i < delta.mask.size(); ++i) out.mask[i] += delta.mask[i];
  return out;
}

}  // namespace sports
