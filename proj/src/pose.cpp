#include "soft_stewart/pose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace soft_stewart {

double wrap_angle(double rad) {
  double w = std::remainder(rad, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double Pose6::operator[](std::size_t i) const {
  switch (i) {
    case 0: return x;
    case 1: return y;
    case 2: return z;
    case 3: return roll;
    case 4: return pitch;
    case 5: return yaw;
  }
  throw std::out_of_range("Pose6 index");
}

double& Pose6::operator[](std::size_t i) {
  switch (i) {
    case 0: return x;
    case 1: return y;
    case 2: return z;
    case 3: return roll;
    case 4: return pitch;
    case 5: return yaw;
  }
  throw std::out_of_range("Pose6 index");
}

bool Pose6::is_finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(roll) &&
         std::isfinite(pitch) && std::isfinite(yaw);
}

std::array<double, 6> Pose6::to_external() const {
  return {x, y, z, rad2deg(roll), rad2deg(pitch), rad2deg(yaw)};
}

Pose6 Pose6::from_external(const std::array<double, 6>& v) {
  return {v[0], v[1], v[2], deg2rad(v[3]), deg2rad(v[4]), deg2rad(v[5])};
}

Eigen::Matrix3d rotation_matrix(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Eigen::Matrix3d r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return r;
}

Transform pose_to_transform(const Pose6& pose) {
  if (!pose.is_finite()) throw std::invalid_argument("pose_to_transform: non-finite pose");
  Transform t = Transform::Identity();
  t.topLeftCorner<3, 3>() = rotation_matrix(pose.roll, pose.pitch, pose.yaw);
  t.topRightCorner<3, 1>() = pose.translation();
  return t;
}

Pose6 transform_to_pose(const Transform& t) {
  const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
  Pose6 p;
  p.x = t(0, 3);
  p.y = t(1, 3);
  p.z = t(2, 3);
  p.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  p.roll = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
  p.yaw = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
  return p;
}

Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Pose6 PoseBounds::center() const {
  Pose6 c;
  for (std::size_t i = 0; i < 6; ++i) c[i] = 0.5 * (min[i] + max[i]);
  return c;
}

bool PoseBounds::contains(const Pose6& p) const {
  for (std::size_t i = 0; i < 6; ++i) {
    if (p[i] < min[i] || p[i] > max[i]) return false;
  }
  return true;
}

}  // namespace soft_stewart
