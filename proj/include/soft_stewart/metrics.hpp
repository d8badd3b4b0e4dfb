#pragma once

#include <vector>

#include <Eigen/Core>

#include "soft_stewart/paths.hpp"

namespace soft_stewart {

struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};
using Trajectory = std::vector<TrajectorySample>;

struct TraceError {
  double mse_cm2 = 0.0;
  std::vector<double> per_waypoint_cm2;
  /// Waypoints whose scoring window has a gap over 1 s or no samples.
  std::vector<bool> flagged;
  bool any_flagged = false;
};

/// Squared distance to each waypoint averaged over the last quarter of its
/// dwell window, then averaged over waypoints that have samples. Waypoint k
/// is active on [start + k dwell, start + (k+1) dwell). Result in cm^2.
TraceError trace_mse(const Trajectory& trajectory, const Path& waypoints, double dwell, double start_time = 0.0);

struct RejectionResult {
  double peak_displacement = 0.0;  // m
  double final_displacement = 0.0;
  double rejected_fraction = 1.0;
};

/// Displacement from `setpoint` after an impulse at t0: peak over
/// [t0, t0 + horizon] and RMS over the last `settle_window` seconds of that
/// interval. rejected_fraction = 1 - final / peak, or 1 without motion.
RejectionResult rejection_fraction(const Trajectory& trajectory, const Eigen::Vector2d& setpoint, double t0,
                                   double horizon = 20.0, double settle_window = 0.5);

}  // namespace soft_stewart
