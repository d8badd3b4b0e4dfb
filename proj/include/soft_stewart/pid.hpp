#pragma once

#include <limits>

namespace soft_stewart {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  /// Bound on |ki * integral|.
  double integral_limit = std::numeric_limits<double>::infinity();
  /// First-order low-pass on the derivative term; 0 disables filtering.
  double derivative_cutoff_hz = 0.0;
  double output_limit = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct PidState {
  double integral = 0.0;  // integral of error, error-units * s
  double prev_error = 0.0;
  double derivative = 0.0;
  bool initialized = false;
  bool saturated = false;

  double integral_term(const PidGains& g) const { return g.ki * integral; }
};

/// One controller update. Integration pauses while the output is saturated
/// and the error would push it further; the integral term is clamped to
/// integral_limit and the output to output_limit.
double pid_step(const PidGains& gains, double setpoint, double measurement, PidState& state, double dt);

}  // namespace soft_stewart
