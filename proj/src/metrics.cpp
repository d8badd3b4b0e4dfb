#include "soft_stewart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace soft_stewart {

TraceError trace_mse(const Trajectory& trajectory, const Path& waypoints, double dwell, double start_time) {
  if (waypoints.empty()) throw std::invalid_argument("trace_mse: no waypoints");
  if (!(dwell > 0.0)) throw std::invalid_argument("trace_mse: dwell must be positive");
  constexpr double kMaxGap = 1.0;
  TraceError out;
  out.per_waypoint_cm2.assign(waypoints.size(), 0.0);
  out.flagged.assign(waypoints.size(), false);

  double sum = 0.0;
  std::size_t scored = 0;
  auto it = trajectory.begin();
  for (std::size_t k = 0; k < waypoints.size(); ++k) {
    const double lo = start_time + (static_cast<double>(k) + 0.75) * dwell;
    const double hi = start_time + static_cast<double>(k + 1) * dwell;
    it = std::lower_bound(it, trajectory.end(), lo, [](const TrajectorySample& s, double t) { return s.t < t; });
    double acc = 0.0, prev = lo, gap = 0.0;
    std::size_t n = 0;
    for (auto j = it; j != trajectory.end() && j->t < hi; ++j) {
      acc += (j->position - waypoints[k]).squaredNorm();
      gap = std::max(gap, j->t - prev);
      prev = j->t;
      ++n;
    }
    gap = std::max(gap, hi - prev);
    if (n == 0 || gap > kMaxGap) {
      out.flagged[k] = true;
      out.any_flagged = true;
    }
    if (n == 0) continue;
    out.per_waypoint_cm2[k] = 1e4 * acc / static_cast<double>(n);
    sum += out.per_waypoint_cm2[k];
    ++scored;
  }
  out.mse_cm2 = scored > 0 ? sum / static_cast<double>(scored) : 0.0;
  return out;
}

RejectionResult rejection_fraction(const Trajectory& trajectory, const Eigen::Vector2d& setpoint, double t0,
                                   double horizon, double settle_window) {
  RejectionResult r;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : trajectory) {
    if (s.t < t0 || s.t > t0 + horizon) continue;
    const double d = (s.position - setpoint).norm();
    r.peak_displacement = std::max(r.peak_displacement, d);
    if (s.t >= t0 + horizon - settle_window) {
      sq += d * d;
      ++n;
    }
  }
  r.final_displacement = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  r.rejected_fraction = r.peak_displacement > 0.0 ? 1.0 - r.final_displacement / r.peak_displacement : 1.0;
  return r;
}

}  // namespace soft_stewart
