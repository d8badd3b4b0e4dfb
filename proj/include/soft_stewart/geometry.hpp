#pragma once

#include <array>

#include <Eigen/Core>

#include "soft_stewart/pose.hpp"

namespace soft_stewart {

inline constexpr std::size_t kStrutCount = 6;

/// Where the upper strut ends sit relative to the lower ones.
enum class UpperAnchorLayout {
  /// Upper anchors share the lower anchor azimuths (pure radial slant).
  Aligned,
  /// Upper anchors sit corner_offset from the corners of an upper hexagon
  /// rotated 60 degrees from the base, so each strut also leans sideways.
  Staggered,
};

struct PlatformGeometry {
  double upper_radius = 0.076;
  double lower_radius = 0.0875;
  double corner_offset = deg2rad(15.5);
  UpperAnchorLayout upper_layout = UpperAnchorLayout::Staggered;
  /// Strut length at 0 degrees of servo rotation.
  double neutral_strut_length = 0.25;
  double max_extension = 0.050;
  /// Meters of extension per radian of servo rotation.
  double servo_gain = 0.050 / deg2rad(270.0);
  double joint_min_deg = 0.0;
  double joint_max_deg = 270.0;

  /// Hardware defaults, with the neutral strut length chosen so that the
  /// all-zero joint vector puts the plate at `neutral_height`.
  static PlatformGeometry defaults(double neutral_height = 0.253);
  /// Recomputes neutral_strut_length for the current anchors.
  void set_neutral_height(double h);

  /// Throws std::invalid_argument when radii or offset are out of range.
  void validate() const;
};

using StrutLengths = std::array<double, kStrutCount>;

/// Six servo angles in degrees plus per-joint clamp flags.
struct JointVector {
  std::array<double, kStrutCount> deg{};
  std::array<bool, kStrutCount> saturated{};

  bool any_saturated() const;
  static JointVector uniform(double deg);
};

struct StrutAnchors {
  std::array<Eigen::Vector3d, kStrutCount> lower;  // frame L
  std::array<Eigen::Vector3d, kStrutCount> upper;  // frame U
};

/// Lower anchor azimuths: three +/-corner_offset pairs, 120 degrees apart.
std::array<double, kStrutCount> strut_anchor_angles(const PlatformGeometry& g);

/// Upper anchor azimuths for the configured layout.
std::array<double, kStrutCount> upper_anchor_angles(const PlatformGeometry& g);

StrutAnchors strut_anchors(const PlatformGeometry& g);

/// Closed-form rigid inverse kinematics: distance between each lower anchor
/// and the corresponding upper anchor carried by the pose.
StrutLengths inverse_kinematics(const Pose6& pose, const PlatformGeometry& g);
StrutLengths inverse_kinematics(const Pose6& pose, const StrutAnchors& anchors);

/// Linear length-to-rotation map, clamped to the joint limits.
JointVector lengths_to_joints(const StrutLengths& lengths, const PlatformGeometry& g);

/// Unclamped inverse of lengths_to_joints.
StrutLengths joints_to_lengths(const JointVector& joints, const PlatformGeometry& g);

struct FkResult {
  Pose6 pose;
  double residual = 0.0;  // norm of the length mismatch, meters
  int iterations = 0;
  bool converged = false;
};

struct FkOptions {
  int max_iterations = 100;
  double jacobian_step = 1e-6;
  double initial_damping = 1e-3;
  double tolerance = 1e-8;
};

/// Numerical forward kinematics by damped Gauss-Newton on the rigid IK.
/// Never throws on non-convergence; inspect FkResult::converged.
FkResult solve_pose_for_lengths(const StrutLengths& target, const PlatformGeometry& g,
                                const Pose6& initial_guess, const FkOptions& opts = {});

FkResult forward_kinematics(const JointVector& joints, const PlatformGeometry& g,
                            const Pose6& initial_guess, const FkOptions& opts = {});

/// Plate height for equal strut lengths, zero tilt.
double height_for_uniform_length(const PlatformGeometry& g, double length);

}  // namespace soft_stewart
