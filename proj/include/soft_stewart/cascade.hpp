#pragma once

#include <optional>
#include <random>

#include "soft_stewart/ball.hpp"
#include "soft_stewart/geometry.hpp"
#include "soft_stewart/paths.hpp"
#include "soft_stewart/pid.hpp"
#include "soft_stewart/plant.hpp"

namespace soft_stewart {

struct CascadeConfig {
  /// Position error (m) -> desired velocity (m/s).
  PidGains outer{1.2, 0.05, 0.0, 0.02, 0.0, 0.25};
  /// Velocity error (m/s) -> tilt (rad).
  PidGains inner{0.35, 0.4, 0.0, deg2rad(4.0), 0.0, deg2rad(10.0)};
  double control_rate = 45.0;
  double max_tilt = deg2rad(10.0);
  double z_setpoint = 0.28;
  double waypoint_dwell = 8.0;
  /// A sample older than this many control periods is stale.
  int stale_periods = 3;
  double velocity_filter_hz = 6.0;
  /// Position errors shorter than this are ignored; longer ones are
  /// shortened by it.
  double position_deadband = 0.0;

  void validate() const;
  double period() const { return 1.0 / control_rate; }

  /// Tuned defaults per object. The puck needs enough tilt to break static
  /// friction and a deadband so it is not nudged back and forth.
  static CascadeConfig for_mode(BallMode mode);
};

struct CascadeState {
  std::array<PidState, 2> outer;  // x, y
  std::array<PidState, 2> inner;
  std::optional<SensorSample> last_sample;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  bool velocity_valid = false;
  Eigen::Vector2d desired_velocity = Eigen::Vector2d::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  JointVector command;
  bool has_command = false;
  bool stale = false;
  bool tilt_saturated = false;
  bool ik_saturated = false;
};

/// One tick of the position -> velocity -> tilt cascade. Pitch drives x and
/// roll drives y. A missing or stale sample holds the previous command and
/// sets `stale`.
JointVector cascade_step(const CascadeConfig& cfg, const PlatformGeometry& geometry, const Waypoint& waypoint,
                         const std::optional<SensorSample>& sensor, CascadeState& state, double now);

/// Level-plate command at the configured height.
JointVector level_command(const CascadeConfig& cfg, const PlatformGeometry& geometry);

struct BalanceConfig {
  PlantConfig plant;
  BallParams ball;
  BallSensorParams sensor;
  CascadeConfig cascade;
};

/// Plant, object, camera and controller stepped together at the plant rate.
class BalanceLoop {
 public:
  BalanceLoop(const BalanceConfig& cfg, std::uint64_t seed);

  /// Levels the plate at the height setpoint and places the object at rest.
  void reset(const Eigen::Vector2d& position);
  void step(const Waypoint& target);
  /// Instantaneous velocity change of the object.
  void apply_impulse(const Eigen::Vector2d& dv);

  double time() const { return plant_.state().time; }
  const BallState& ball() const { return ball_; }
  const Plant& plant() const { return plant_; }
  const CascadeState& controller() const { return control_; }
  const std::optional<SensorSample>& latest_sample() const { return sample_; }
  const BalanceConfig& config() const { return cfg_; }

 private:
  BalanceConfig cfg_;
  Plant plant_;
  BallSensor sensor_;
  std::mt19937_64 rng_;
  BallState ball_;
  CascadeState control_;
  std::optional<SensorSample> sample_;
  JointVector command_;
  double next_control_ = 0.0;
};

}  // namespace soft_stewart
