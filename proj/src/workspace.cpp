#include "soft_stewart/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace soft_stewart {

std::vector<JointVector> joint_raster(double increment_deg, const PlatformGeometry& g) {
  const double range = g.joint_max_deg - g.joint_min_deg;
  if (!(increment_deg > 0.0)) throw std::invalid_argument("raster: increment must be positive");
  const double steps = range / increment_deg;
  const long levels = std::lround(steps);
  if (levels < 1 || std::abs(steps - static_cast<double>(levels)) > 1e-9)
    throw std::invalid_argument("raster: increment must divide the joint range");
  const std::size_t per = static_cast<std::size_t>(levels) + 1;
  std::size_t count = 1;
  for (std::size_t n = 0; n < kStrutCount; ++n) count *= per;

  std::vector<JointVector> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rem = k;
    for (std::size_t n = 0; n < kStrutCount; ++n) {
      out[k].deg[n] = g.joint_min_deg + increment_deg * static_cast<double>(rem % per);
      rem /= per;
    }
  }
  return out;
}

std::vector<WorkspaceSample> workspace_scan(Plant& plant, const ScanOptions& opts) {
  const auto raster = joint_raster(opts.increment_deg, plant.config().geometry);
  std::vector<std::size_t> order(raster.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const JointVector neutral = JointVector::uniform(plant.config().geometry.joint_min_deg);
  std::vector<WorkspaceSample> out;
  out.reserve(raster.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const JointVector& q = raster[order[i]];
    plant.reset(neutral);
    WorkspaceSample s;
    s.joints = q;
    s.order = i;
    s.settled = plant.settle(q, opts.settle_time, opts.short_circuit).settled;
    s.pose = plant.state().pose;
    s.buckled = plant.state().any_buckled() || plant.state().feasibility.load_class == LoadClass::Infeasible;
    out.push_back(s);
  }
  plant.reset(neutral);
  return out;
}

WorkspaceExtents workspace_extents(const std::vector<WorkspaceSample>& samples) {
  WorkspaceExtents e;
  for (auto& a : e.axes) {
    a.min = std::numeric_limits<double>::infinity();
    a.max = -std::numeric_limits<double>::infinity();
  }
  std::vector<Eigen::Vector3d> pos, rot;
  std::vector<Eigen::Vector2d> xy;
  for (const auto& s : samples) {
    if (s.buckled) {
      ++e.excluded;
      continue;
    }
    ++e.used;
    for (std::size_t i = 0; i < 6; ++i) {
      e.axes[i].min = std::min(e.axes[i].min, s.pose[i]);
      e.axes[i].max = std::max(e.axes[i].max, s.pose[i]);
    }
    pos.emplace_back(s.pose.x, s.pose.y, s.pose.z);
    rot.emplace_back(rad2deg(s.pose.roll), rad2deg(s.pose.pitch), rad2deg(s.pose.yaw));
    xy.emplace_back(s.pose.x, s.pose.y);
  }
  if (e.used == 0) throw std::invalid_argument("workspace extents: no usable samples");
  e.position_hull = convex_hull(pos);
  e.orientation_hull = convex_hull(rot);
  e.xy_profile = triangular_profile(xy);
  return e;
}

CorrelationMatrix correlation_matrix(const std::vector<Pose6>& poses) {
  if (poses.size() < 3) throw std::invalid_argument("correlation: need at least 3 samples");
  const double n = static_cast<double>(poses.size());
  std::array<double, 6> mean{};
  for (const auto& p : poses)
    for (std::size_t i = 0; i < 6; ++i) mean[i] += p[i] / n;
  std::array<std::array<double, 6>, 6> cov{};
  for (const auto& p : poses)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i; j < 6; ++j) cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);

  CorrelationMatrix c;
  for (std::size_t i = 0; i < 6; ++i) {
    // Relative to the axis magnitude so rounding noise on a constant axis is not a variance.
    double scale = 0.0;
    for (const auto& p : poses) scale = std::max(scale, std::abs(p[i]));
    c.defined[i] = cov[i][i] > n * std::pow(1e-12 * std::max(scale, 1e-300), 2);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i; j < 6; ++j) {
      double r = nan;
      if (c.defined[i] && c.defined[j])
        r = i == j ? 1.0 : std::clamp(cov[i][j] / std::sqrt(cov[i][i] * cov[j][j]), -1.0, 1.0);
      c.r[i][j] = c.r[j][i] = r;
    }
  }
  return c;
}

CorrelationMatrix correlation_matrix(const std::vector<WorkspaceSample>& samples) {
  std::vector<Pose6> poses;
  for (const auto& s : samples)
    if (!s.buckled) poses.push_back(s.pose);
  return correlation_matrix(poses);
}

}  // namespace soft_stewart
