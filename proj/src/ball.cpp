#include "soft_stewart/ball.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soft_stewart {

namespace {

constexpr double kRollingFactor = 5.0 / 7.0;

Eigen::Vector2d fence_normal(int k) {
  const double a = kPi / 6.0 + k * kPi / 3.0;
  return {std::cos(a), std::sin(a)};
}

}  // namespace

const char* to_string(BallMode m) { return m == BallMode::RollingBall ? "ball" : "puck"; }

Eigen::Vector2d tilt_gravity(const Pose6& plate_pose) {
  return {kGravity * std::sin(plate_pose.pitch), -kGravity * std::cos(plate_pose.pitch) * std::sin(plate_pose.roll)};
}

double fence_limit(const BallParams& params) { return params.fence_apothem - params.radius; }

bool inside_fence(const Eigen::Vector2d& p, double apothem) {
  for (int k = 0; k < 6; ++k)
    if (fence_normal(k).dot(p) > apothem) return false;
  return true;
}

BallState ball_step(const BallState& ball, const Pose6& plate_pose, double dt, const BallParams& params) {
  if (!(dt > 0.0) || !plate_pose.is_finite()) throw std::invalid_argument("ball_step: bad input");
  BallState next = ball;
  const Eigen::Vector2d g = tilt_gravity(plate_pose);

  if (params.mode == BallMode::RollingBall) {
    // Semi-implicit Euler; the drag factor keeps it dissipative for any dt.
    next.velocity = (ball.velocity + kRollingFactor * g * dt) / (1.0 + params.rolling_resistance * dt);
  } else {
    const double normal = kGravity * std::cos(plate_pose.pitch) * std::cos(plate_pose.roll);
    const double speed = ball.velocity.norm();
    if (speed == 0.0 && g.norm() <= params.static_friction * normal) {
      next.velocity.setZero();
    } else {
      Eigen::Vector2d v = ball.velocity + g * dt;
      const double brake = params.kinetic_friction * normal * dt;
      const double vn = v.norm();
      next.velocity = vn <= brake ? Eigen::Vector2d::Zero() : Eigen::Vector2d(v * (1.0 - brake / vn));
    }
  }
  next.position = ball.position + 0.5 * (ball.velocity + next.velocity) * dt;

  const double limit = fence_limit(params);
  next.at_fence = false;
  for (int k = 0; k < 6; ++k) {
    const Eigen::Vector2d n = fence_normal(k);
    const double over = n.dot(next.position) - limit;
    if (over < 0.0) continue;
    next.at_fence = true;
    next.position -= over * n;
    const double vn = n.dot(next.velocity);
    if (vn > 0.0) next.velocity -= (1.0 + params.restitution) * vn * n;
  }
  return next;
}

void BallSensor::reset() {
  history_.clear();
  window_.clear();
  primed_ = false;
  raw_count_ = 0;
}

std::optional<SensorSample> BallSensor::update(const BallState& truth, double t, std::mt19937_64& rng) {
  history_.emplace_back(t, truth.position);
  while (history_.size() > 2 && history_[1].first <= t - params_.latency) history_.pop_front();
  if (!primed_) {
    primed_ = true;
    next_raw_ = t;
  }
  if (t + 1e-9 < next_raw_) return std::nullopt;
  next_raw_ += 1.0 / params_.raw_rate;

  // Position at t - latency, linearly interpolated from the history.
  const double seen = t - params_.latency;
  Eigen::Vector2d p = history_.front().second;
  for (std::size_t i = 1; i < history_.size(); ++i) {
    if (history_[i].first >= seen) {
      const auto& [t0, p0] = history_[i - 1];
      const auto& [t1, p1] = history_[i];
      const double a = t1 > t0 ? std::clamp((seen - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
      p = (1.0 - a) * p0 + a * p1;
      break;
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  const double nx = noise(rng), ny = noise(rng);
  window_.push_back(p + params_.noise * Eigen::Vector2d(nx, ny));
  while (static_cast<int>(window_.size()) > params_.window) window_.pop_front();
  if (++raw_count_ % params_.publish_every != 0) return std::nullopt;

  SensorSample s;
  for (const auto& w : window_) s.measured += w;
  s.measured /= static_cast<double>(window_.size());
  s.timestamp = t;
  return s;
}

}  // namespace soft_stewart
