#include "soft_stewart/compliance.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

namespace soft_stewart {

CompliantEquilibrium::CompliantEquilibrium(const PlatformGeometry& geometry, const ComplianceParams& params)
    : geometry_(geometry), params_(params), anchors_(strut_anchors(geometry)) {
  neutral_ = Pose6{0.0, 0.0, height_for_uniform_length(geometry, geometry.neutral_strut_length), 0.0, 0.0, 0.0};
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const Eigen::Vector3d dir = (neutral_.translation() + anchors_.upper[n] - anchors_.lower[n]).normalized();
    clamp_lower_[n] = dir;
    clamp_upper_[n] = dir;  // plate frame coincides with base orientation at neutral
  }
}

CompliantEquilibrium::Residuals CompliantEquilibrium::residuals(const Pose6& pose,
                                                                const StrutLengths& rest) const {
  const Eigen::Matrix3d r = rotation_matrix(pose.roll, pose.pitch, pose.yaw);
  const Eigen::Vector3d p = pose.translation();
  const Eigen::Vector3d rotvec = rotation_vector(r);
  const double ka = std::sqrt(params_.axial_stiffness);
  const double kt = std::sqrt(params_.torsion_stiffness);

  Residuals out;
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const Eigen::Vector3d chord = p + r * anchors_.upper[n] - anchors_.lower[n];
    const double len = chord.norm();
    const Eigen::Vector3d unit = chord / len;
    // End rotations relative to the chord. Beam energy
    // (2EI/L)(|a|^2 + a.b + |b|^2) = (EI/L)(|a+b|^2 + |a|^2 + |b|^2).
    const Eigen::Vector3d a = unit.cross(clamp_lower_[n]);
    const Eigen::Vector3d b = unit.cross(r * clamp_upper_[n]);
    const double kb = std::sqrt(2.0 * params_.bending_stiffness / len);

    const auto i = static_cast<Eigen::Index>(n);
    out[i] = ka * (len - rest[n]);
    out.segment<3>(6 + 9 * i) = kb * (a + b);
    out.segment<3>(9 + 9 * i) = kb * a;
    out.segment<3>(12 + 9 * i) = kb * b;
    out[60 + i] = kt * unit.dot(rotvec);
  }
  return out;
}

double CompliantEquilibrium::energy(const Pose6& pose, const StrutLengths& rest) const {
  return 0.5 * residuals(pose, rest).squaredNorm();
}

Pose6 CompliantEquilibrium::solve(const StrutLengths& rest, const Pose6& guess, int max_iterations) const {
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Jac = Eigen::Matrix<double, kResiduals, 6>;
  constexpr double kStep = 1e-7;
  constexpr double kTolerance = 1e-8;  // m and rad

  auto to_pose = [](const Vec6& v) { return Pose6{v[0], v[1], v[2], v[3], v[4], v[5]}; };

  Vec6 x;
  for (std::size_t i = 0; i < 6; ++i) x[i] = guess[i];
  Residuals res = residuals(guess, rest);
  double cost = res.squaredNorm();
  double lambda = 1e-6;

  for (int it = 0; it < max_iterations; ++it) {
    Jac jac;
    for (int k = 0; k < 6; ++k) {
      Vec6 xp = x;
      xp[k] += kStep;
      jac.col(k) = (residuals(to_pose(xp), rest) - res) / kStep;
    }
    const Mat6 a = jac.transpose() * jac;
    const Vec6 grad = jac.transpose() * res;

    bool accepted = false;
    Vec6 step = Vec6::Zero();
    while (lambda < 1e8) {
      step = -(a + lambda * Mat6::Identity()).ldlt().solve(grad);
      if (step.norm() < kTolerance) break;
      const Vec6 xn = x + step;
      const Residuals rn = residuals(to_pose(xn), rest);
      const double cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn <= cost) {
        x = xn;
        res = rn;
        cost = cn;
        lambda = std::max(lambda * 0.1, 1e-9);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || step.norm() < kTolerance) break;
  }
  return to_pose(x);
}

}  // namespace soft_stewart
