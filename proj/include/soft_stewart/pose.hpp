#pragma once

#include <array>
#include <cstddef>
#include <numbers>

#include <Eigen/Core>

namespace soft_stewart {

constexpr double kPi = std::numbers::pi;
constexpr double kGravity = 9.81;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double rad);

/// Pose axes in storage order.
enum class Axis : std::size_t { X = 0, Y, Z, Roll, Pitch, Yaw };

inline constexpr std::array<const char*, 6> kAxisNames = {"x", "y", "z", "roll", "pitch", "yaw"};

/// Pose of the top-plate frame U expressed in the base frame L.
///
/// Translation in meters, orientation in radians. Orientation uses extrinsic
/// roll-pitch-yaw: rotate about the fixed X axis by roll, then fixed Y by
/// pitch, then fixed Z by yaw, i.e. R = Rz(yaw) * Ry(pitch) * Rx(roll). This
/// convention is used everywhere in the project; degrees only appear at the
/// external interfaces (CSV, config, learned-model features).
struct Pose6 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  double operator[](std::size_t i) const;
  double& operator[](std::size_t i);
  double operator[](Axis a) const { return (*this)[static_cast<std::size_t>(a)]; }
  double& operator[](Axis a) { return (*this)[static_cast<std::size_t>(a)]; }

  bool is_finite() const;
  Eigen::Vector3d translation() const { return {x, y, z}; }

  std::array<double, 6> to_array() const { return {x, y, z, roll, pitch, yaw}; }
  static Pose6 from_array(const std::array<double, 6>& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

  /// Same pose with angles in degrees (for external interfaces).
  std::array<double, 6> to_external() const;
  static Pose6 from_external(const std::array<double, 6>& v);

  friend bool operator==(const Pose6&, const Pose6&) = default;
};

using Transform = Eigen::Matrix4d;

Eigen::Matrix3d rotation_matrix(double roll, double pitch, double yaw);

/// Throws std::invalid_argument for non-finite poses.
Transform pose_to_transform(const Pose6& pose);

/// Inverse of pose_to_transform for |pitch| < pi/2.
Pose6 transform_to_pose(const Transform& t);

/// Rotation-vector (axis * angle) of a rotation matrix.
Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& r);

/// Axis-aligned pose box; defaults are the measured workspace limits of the
/// hardware build.
struct PoseBounds {
  Pose6 min{-0.06, -0.056, 0.237, deg2rad(-15.5), deg2rad(-18.2), deg2rad(-14.8)};
  Pose6 max{0.06, 0.061, 0.316, deg2rad(18.6), deg2rad(16.0), deg2rad(14.4)};

  Pose6 center() const;
  double half_range(std::size_t axis) const { return 0.5 * (max[axis] - min[axis]); }
  bool contains(const Pose6& p) const;
};

}  // namespace soft_stewart
