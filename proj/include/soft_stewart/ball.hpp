#pragma once

#include <array>
#include <deque>
#include <optional>
#include <random>

#include <Eigen/Core>

#include "soft_stewart/pose.hpp"

namespace soft_stewart {

enum class BallMode { RollingBall, FrictionPuck };
const char* to_string(BallMode m);

struct BallParams {
  BallMode mode = BallMode::RollingBall;
  double radius = 0.01905;
  double mass = 0.05;
  double rolling_resistance = 0.05;  // 1/s, viscous
  double static_friction = 0.15;
  double kinetic_friction = 0.10;
  double restitution = 0.3;
  /// Regular hexagon fence with one pair of sides facing +/-y.
  double fence_apothem = 0.15;
};

struct BallState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // plate frame U, m
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  bool at_fence = false;
};

/// In-plane gravity for a plate at (roll, pitch): g (sin p, -cos p sin r).
Eigen::Vector2d tilt_gravity(const Pose6& plate_pose);

/// Advances the object on the plate by dt. Rolling spheres feel 5/7 of the
/// in-plane gravity; the puck slides and obeys Coulomb friction.
BallState ball_step(const BallState& ball, const Pose6& plate_pose, double dt, const BallParams& params);

/// Fence apothem available to the object's center.
double fence_limit(const BallParams& params);
bool inside_fence(const Eigen::Vector2d& p, double apothem);

struct SensorSample {
  Eigen::Vector2d measured = Eigen::Vector2d::Zero();
  double timestamp = 0.0;
};

struct BallSensorParams {
  double raw_rate = 90.0;
  int publish_every = 2;  // raw samples per published sample
  int window = 4;
  double noise = 0.001;   // m, per axis
  double latency = 0.008;
};

/// Overhead camera: raw detections at raw_rate, moving average over `window`
/// detections, published every `publish_every` detections.
class BallSensor {
 public:
  explicit BallSensor(BallSensorParams params = {}) : params_(params) {}

  /// Feed every simulation step with the true state at time t.
  std::optional<SensorSample> update(const BallState& truth, double t, std::mt19937_64& rng);
  void reset();
  const BallSensorParams& params() const { return params_; }

 private:
  BallSensorParams params_;
  std::deque<std::pair<double, Eigen::Vector2d>> history_;
  std::deque<Eigen::Vector2d> window_;
  double next_raw_ = 0.0;
  bool primed_ = false;
  long raw_count_ = 0;
};

}  // namespace soft_stewart
