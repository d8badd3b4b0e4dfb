#include "soft_stewart/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soft_stewart {

void CascadeConfig::validate() const {
  outer.validate();
  inner.validate();
  if (!(control_rate > 0.0) || control_rate > 100.0)
    throw std::invalid_argument("cascade: control rate must lie in (0, 100] Hz");
  if (!(max_tilt > 0.0) || max_tilt >= kPi / 6.0) throw std::invalid_argument("cascade: max tilt out of range");
  if (!(z_setpoint > 0.0) || !(waypoint_dwell > 0.0) || stale_periods < 1 || position_deadband < 0.0)
    throw std::invalid_argument("cascade: invalid setpoint, dwell or staleness");
}

CascadeConfig CascadeConfig::for_mode(BallMode mode) {
  CascadeConfig c;
  if (mode == BallMode::FrictionPuck) {
    c.outer = PidGains{0.8, 0.0, 0.0, 0.02, 0.0, 0.25};
    c.inner = PidGains{0.8, 15.0, 0.0, deg2rad(12.0), 0.0, deg2rad(15.0)};
    c.max_tilt = deg2rad(15.0);
    c.position_deadband = 0.004;
  }
  return c;
}

JointVector level_command(const CascadeConfig& cfg, const PlatformGeometry& geometry) {
  return lengths_to_joints(inverse_kinematics(Pose6{0.0, 0.0, cfg.z_setpoint, 0.0, 0.0, 0.0}, geometry), geometry);
}

JointVector cascade_step(const CascadeConfig& cfg, const PlatformGeometry& geometry, const Waypoint& waypoint,
                         const std::optional<SensorSample>& sensor, CascadeState& state, double now) {
  const double dt = cfg.period();
  const double max_age = cfg.stale_periods * dt + 1e-9;
  state.stale = !sensor || now - sensor->timestamp > max_age;
  if (state.stale) {
    if (!state.has_command) {
      state.command = level_command(cfg, geometry);
      state.has_command = true;
    }
    return state.command;
  }

  const bool fresh = !state.last_sample || sensor->timestamp > state.last_sample->timestamp;
  if (fresh && state.last_sample) {
    const double span = sensor->timestamp - state.last_sample->timestamp;
    const Eigen::Vector2d raw = (sensor->measured - state.last_sample->measured) / span;
    if (!state.velocity_valid) {
      state.velocity = raw;
      state.velocity_valid = true;
    } else {
      const double tau = 1.0 / (2.0 * kPi * cfg.velocity_filter_hz);
      state.velocity += span / (tau + span) * (raw - state.velocity);
    }
  }
  if (fresh) state.last_sample = sensor;

  const Eigen::Vector2d& p = sensor->measured;
  Eigen::Vector2d error = waypoint - p;
  const double reach = error.norm();
  error = reach <= cfg.position_deadband ? Eigen::Vector2d::Zero() : Eigen::Vector2d(error * (1.0 - cfg.position_deadband / reach));
  std::array<double, 2> tilt{};
  for (int a = 0; a < 2; ++a) {
    const auto i = static_cast<std::size_t>(a);
    state.desired_velocity[a] = pid_step(cfg.outer, p[a] + error[a], p[a], state.outer[i], dt);
    tilt[i] = pid_step(cfg.inner, state.desired_velocity[a], state.velocity[a], state.inner[i], dt);
  }
  const double pitch = std::clamp(tilt[0], -cfg.max_tilt, cfg.max_tilt);
  const double roll = std::clamp(-tilt[1], -cfg.max_tilt, cfg.max_tilt);
  state.tilt_saturated = pitch != tilt[0] || roll != -tilt[1] || state.inner[0].saturated || state.inner[1].saturated;
  state.pitch = pitch;
  state.roll = roll;

  state.command = lengths_to_joints(
      inverse_kinematics(Pose6{0.0, 0.0, cfg.z_setpoint, roll, pitch, 0.0}, geometry), geometry);
  state.ik_saturated = state.command.any_saturated();
  state.has_command = true;
  return state.command;
}

BalanceLoop::BalanceLoop(const BalanceConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), plant_(cfg.plant, cfg.ball.mass), sensor_(cfg.sensor), rng_(seed) {
  cfg_.cascade.validate();
  reset(Eigen::Vector2d::Zero());
}

void BalanceLoop::reset(const Eigen::Vector2d& position) {
  command_ = level_command(cfg_.cascade, cfg_.plant.geometry);
  plant_.reset(command_);
  plant_.settle(command_, 3.0);
  ball_ = BallState{};
  ball_.position = position;
  control_ = CascadeState{};
  control_.command = command_;
  control_.has_command = true;
  sensor_.reset();
  sample_.reset();
  next_control_ = plant_.state().time;
}

void BalanceLoop::step(const Waypoint& target) {
  const double dt = plant_.config().dt();
  const double now = plant_.state().time;
  if (auto s = sensor_.update(ball_, now, rng_)) sample_ = s;
  if (now + 1e-9 >= next_control_) {
    command_ = cascade_step(cfg_.cascade, cfg_.plant.geometry, target, sample_, control_, now);
    next_control_ += cfg_.cascade.period();
  }
  plant_.step(command_, dt);
  ball_ = ball_step(ball_, plant_.state().pose, dt, cfg_.ball);
}

void BalanceLoop::apply_impulse(const Eigen::Vector2d& dv) { ball_.velocity += dv; }

}  // namespace soft_stewart
