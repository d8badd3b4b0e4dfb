#pragma once

#include <array>

#include "soft_stewart/pose.hpp"

namespace soft_stewart {

/// Affine map of six axes in [-1, 1] onto the bounds: -1 -> min, 0 -> center,
/// +1 -> max. Inputs are clamped first.
Pose6 teleop_map(const std::array<double, 6>& axes, const PoseBounds& bounds = {});

/// Limits how fast a pose target may move.
class PoseRateLimiter {
 public:
  PoseRateLimiter(double max_speed = 0.1, double max_angular_rate = deg2rad(120.0))
      : max_speed_(max_speed), max_angular_rate_(max_angular_rate) {}

  void reset(const Pose6& pose) {
    current_ = pose;
    primed_ = true;
  }
  /// Moves toward `target` by at most the rate limits times dt.
  const Pose6& step(const Pose6& target, double dt);
  const Pose6& current() const { return current_; }

 private:
  double max_speed_;
  double max_angular_rate_;
  Pose6 current_;
  bool primed_ = false;
};

}  // namespace soft_stewart
