#include "soft_stewart/teleop.hpp"

#include <algorithm>
#include <cmath>

namespace soft_stewart {

Pose6 teleop_map(const std::array<double, 6>& axes, const PoseBounds& bounds) {
  Pose6 p;
  for (std::size_t i = 0; i < 6; ++i) {
    const double a = std::isfinite(axes[i]) ? std::clamp(axes[i], -1.0, 1.0) : 0.0;
    p[i] = bounds.min[i] + 0.5 * (a + 1.0) * (bounds.max[i] - bounds.min[i]);
  }
  return p;
}

const Pose6& PoseRateLimiter::step(const Pose6& target, double dt) {
  if (!primed_) {
    reset(target);
    return current_;
  }
  const Eigen::Vector3d dp = target.translation() - current_.translation();
  const double max_move = max_speed_ * dt;
  const double scale = dp.norm() > max_move ? max_move / dp.norm() : 1.0;
  for (std::size_t i = 0; i < 3; ++i) current_[i] += scale * dp[static_cast<Eigen::Index>(i)];
  const double max_turn = max_angular_rate_ * dt;
  for (std::size_t i = 3; i < 6; ++i) current_[i] += std::clamp(target[i] - current_[i], -max_turn, max_turn);
  return current_;
}

}  // namespace soft_stewart
