#include "soft_stewart/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace soft_stewart {

namespace {

// (-1)^n for the 1-based strut index n.
double pair_sign(std::size_t n) { return (n % 2 == 0) ? 1.0 : -1.0; }

double corner_angle(std::size_t n) { return (2.0 * kPi / 3.0) * static_cast<double>(n / 2); }

double planar_offset(const PlatformGeometry& g) {
  const StrutAnchors a = strut_anchors(g);
  return (a.upper[0] - a.lower[0]).head<2>().norm();
}

}  // namespace

PlatformGeometry PlatformGeometry::defaults(double neutral_height) {
  PlatformGeometry g;
  g.set_neutral_height(neutral_height);
  return g;
}

void PlatformGeometry::set_neutral_height(double h) {
  const double d = planar_offset(*this);
  neutral_strut_length = std::sqrt(h * h + d * d);
}

void PlatformGeometry::validate() const {
  if (!(upper_radius > 0.0) || !(lower_radius > 0.0))
    throw std::invalid_argument("geometry: radii must be positive");
  if (!(corner_offset > 0.0 && corner_offset < kPi / 3.0))
    throw std::invalid_argument("geometry: corner offset must lie in (0, 60) degrees");
  if (!(neutral_strut_length > 0.0) || !(max_extension > 0.0) || !(servo_gain > 0.0))
    throw std::invalid_argument("geometry: strut parameters must be positive");
  if (!(joint_max_deg > joint_min_deg))
    throw std::invalid_argument("geometry: empty joint range");
}

bool JointVector::any_saturated() const {
  return std::any_of(saturated.begin(), saturated.end(), [](bool s) { return s; });
}

JointVector JointVector::uniform(double deg) {
  JointVector j;
  j.deg.fill(deg);
  return j;
}

std::array<double, kStrutCount> strut_anchor_angles(const PlatformGeometry& g) {
  std::array<double, kStrutCount> theta{};
  for (std::size_t n = 1; n <= kStrutCount; ++n)
    theta[n - 1] = wrap_angle(pair_sign(n) * g.corner_offset + corner_angle(n));
  return theta;
}

std::array<double, kStrutCount> upper_anchor_angles(const PlatformGeometry& g) {
  if (g.upper_layout == UpperAnchorLayout::Aligned) return strut_anchor_angles(g);
  std::array<double, kStrutCount> theta{};
  for (std::size_t n = 1; n <= kStrutCount; ++n)
    theta[n - 1] = wrap_angle(corner_angle(n) + pair_sign(n) * (kPi / 3.0 - g.corner_offset));
  return theta;
}

StrutAnchors strut_anchors(const PlatformGeometry& g) {
  const auto lower = strut_anchor_angles(g);
  const auto upper = upper_anchor_angles(g);
  StrutAnchors a;
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    a.lower[n] = {g.lower_radius * std::cos(lower[n]), g.lower_radius * std::sin(lower[n]), 0.0};
    a.upper[n] = {g.upper_radius * std::cos(upper[n]), g.upper_radius * std::sin(upper[n]), 0.0};
  }
  return a;
}

StrutLengths inverse_kinematics(const Pose6& pose, const StrutAnchors& anchors) {
  const Eigen::Matrix3d r = rotation_matrix(pose.roll, pose.pitch, pose.yaw);
  const Eigen::Vector3d p = pose.translation();
  StrutLengths l{};
  for (std::size_t n = 0; n < kStrutCount; ++n)
    l[n] = (p + r * anchors.upper[n] - anchors.lower[n]).norm();
  return l;
}

StrutLengths inverse_kinematics(const Pose6& pose, const PlatformGeometry& g) {
  return inverse_kinematics(pose, strut_anchors(g));
}

JointVector lengths_to_joints(const StrutLengths& lengths, const PlatformGeometry& g) {
  JointVector j;
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const double deg = rad2deg((lengths[n] - g.neutral_strut_length) / g.servo_gain);
    j.deg[n] = std::clamp(deg, g.joint_min_deg, g.joint_max_deg);
    j.saturated[n] = deg < g.joint_min_deg || deg > g.joint_max_deg;
  }
  return j;
}

StrutLengths joints_to_lengths(const JointVector& joints, const PlatformGeometry& g) {
  StrutLengths l{};
  for (std::size_t n = 0; n < kStrutCount; ++n)
    l[n] = g.neutral_strut_length + g.servo_gain * deg2rad(joints.deg[n]);
  return l;
}

FkResult solve_pose_for_lengths(const StrutLengths& target, const PlatformGeometry& g,
                                const Pose6& initial_guess, const FkOptions& opts) {
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  const StrutAnchors anchors = strut_anchors(g);

  auto residual = [&](const Vec6& x) {
    const StrutLengths l = inverse_kinematics(Pose6{x[0], x[1], x[2], x[3], x[4], x[5]}, anchors);
    Vec6 r;
    for (std::size_t n = 0; n < kStrutCount; ++n) r[n] = l[n] - target[n];
    return r;
  };

  Vec6 x;
  for (std::size_t i = 0; i < 6; ++i) x[i] = initial_guess[i];
  Vec6 r = residual(x);
  double cost = r.squaredNorm();
  double lambda = opts.initial_damping;

  FkResult out;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (std::sqrt(cost) < 1e-14) break;
    Mat6 jac;
    for (int k = 0; k < 6; ++k) {
      Vec6 xp = x, xm = x;
      xp[k] += opts.jacobian_step;
      xm[k] -= opts.jacobian_step;
      jac.col(k) = (residual(xp) - residual(xm)) / (2.0 * opts.jacobian_step);
    }
    const Mat6 a = jac.transpose() * jac;
    const Vec6 grad = jac.transpose() * r;

    bool accepted = false;
    while (lambda < 1e12) {
      const Vec6 step = -(a + lambda * Mat6::Identity()).ldlt().solve(grad);
      const Vec6 xn = x + step;
      const Vec6 rn = residual(xn);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        x = xn;
        r = rn;
        cost = cn;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  out.pose = Pose6{x[0], x[1], x[2], wrap_angle(x[3]), wrap_angle(x[4]), wrap_angle(x[5])};
  out.residual = std::sqrt(cost);
  out.iterations = it;
  out.converged = out.residual < opts.tolerance;
  return out;
}

FkResult forward_kinematics(const JointVector& joints, const PlatformGeometry& g,
                            const Pose6& initial_guess, const FkOptions& opts) {
  return solve_pose_for_lengths(joints_to_lengths(joints, g), g, initial_guess, opts);
}

double height_for_uniform_length(const PlatformGeometry& g, double length) {
  const double d = planar_offset(g);
  return std::sqrt(std::max(0.0, length * length - d * d));
}

}  // namespace soft_stewart
