#pragma once

#include <array>

#include <Eigen/Core>

#include "soft_stewart/geometry.hpp"

namespace soft_stewart {

/// Elastic constants of one HSA strut.
struct ComplianceParams {
  double axial_stiffness = 4000.0;   // N/m
  double bending_stiffness = 1.7;    // EI, N m^2
  double torsion_stiffness = 0.3;    // N m / rad
};

/// Quasi-static plate pose for given strut rest lengths.
///
/// Each strut is an elastic beam clamped to its servo at the bottom and to
/// the plate at the top, both clamps aligned with the strut direction of the
/// neutral pose. The plate settles where the summed axial, bending and
/// torsion energy is minimal. With zero bending and torsion stiffness this
/// reduces to rigid forward kinematics.
class CompliantEquilibrium {
 public:
  CompliantEquilibrium(const PlatformGeometry& geometry, const ComplianceParams& params);

  /// Gauss-Newton on the energy residuals, warm-started from `guess`.
  Pose6 solve(const StrutLengths& rest_lengths, const Pose6& guess, int max_iterations = 30) const;

  double energy(const Pose6& pose, const StrutLengths& rest_lengths) const;

  const Pose6& neutral_pose() const { return neutral_; }
  const PlatformGeometry& geometry() const { return geometry_; }

  static constexpr int kResiduals = 66;
  using Residuals = Eigen::Matrix<double, kResiduals, 1>;
  Residuals residuals(const Pose6& pose, const StrutLengths& rest_lengths) const;

 private:
  PlatformGeometry geometry_;
  ComplianceParams params_;
  StrutAnchors anchors_;
  std::array<Eigen::Vector3d, kStrutCount> clamp_lower_;
  std::array<Eigen::Vector3d, kStrutCount> clamp_upper_;
  Pose6 neutral_;
};

}  // namespace soft_stewart
