#include "soft_stewart/pid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace soft_stewart {

void PidGains::validate() const {
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd))
    throw std::invalid_argument("pid: gains must be finite");
  if (!(output_limit > 0.0)) throw std::invalid_argument("pid: output_limit must be positive");
  if (!(integral_limit >= 0.0)) throw std::invalid_argument("pid: integral_limit must be non-negative");
  if (derivative_cutoff_hz < 0.0) throw std::invalid_argument("pid: negative derivative cutoff");
}

double pid_step(const PidGains& gains, double setpoint, double measurement, PidState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid: dt must be positive");
  const double error = setpoint - measurement;
  if (!state.initialized) {
    state.prev_error = error;
    state.derivative = 0.0;
    state.initialized = true;
  }

  const double raw_derivative = (error - state.prev_error) / dt;
  if (gains.derivative_cutoff_hz > 0.0) {
    const double tau = 1.0 / (2.0 * std::numbers::pi * gains.derivative_cutoff_hz);
    state.derivative += dt / (tau + dt) * (raw_derivative - state.derivative);
  } else {
    state.derivative = raw_derivative;
  }
  state.prev_error = error;

  // Skip integration when already saturated in the direction the error pushes.
  const double unclamped_prev = gains.kp * error + gains.ki * state.integral + gains.kd * state.derivative;
  const bool winding = state.saturated && std::abs(unclamped_prev) >= gains.output_limit &&
                       (error * unclamped_prev > 0.0);
  if (!winding && gains.ki != 0.0) {
    state.integral += error * dt;
    const double bound = gains.integral_limit / std::abs(gains.ki);
    state.integral = std::clamp(state.integral, -bound, bound);
  }

  const double out = gains.kp * error + gains.ki * state.integral + gains.kd * state.derivative;
  const double clamped = std::clamp(out, -gains.output_limit, gains.output_limit);
  state.saturated = clamped != out;
  return clamped;
}

}  // namespace soft_stewart
