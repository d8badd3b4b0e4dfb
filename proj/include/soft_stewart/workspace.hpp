#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "soft_stewart/hull.hpp"
#include "soft_stewart/plant.hpp"

namespace soft_stewart {

struct WorkspaceSample {
  JointVector joints;
  Pose6 pose;            // recorded after the settle interval
  std::size_t order = 0; // position in the visiting sequence
  bool settled = false;  // the short-circuit fired before the dwell ran out
  bool buckled = false;  // excluded from statistics
};

struct ScanOptions {
  double increment_deg = 90.0;
  std::uint64_t shuffle_seed = 0;
  double settle_time = 3.0;
  bool short_circuit = true;
};

/// Every joint vector on the raster, in lexicographic order (joint 0 fastest).
std::vector<JointVector> joint_raster(double increment_deg, const PlatformGeometry& g);

/// Visits the raster in seeded shuffled order. Each pose starts from the
/// plant at rest in the neutral (all-zero) configuration, so the plant is
/// left in neutral afterwards.
std::vector<WorkspaceSample> workspace_scan(Plant& plant, const ScanOptions& opts);

struct AxisExtent {
  double min = 0.0;
  double max = 0.0;
  double total() const { return max - min; }
};

struct WorkspaceExtents {
  /// Per pose axis; angles in radians.
  std::array<AxisExtent, 6> axes{};
  std::size_t used = 0;
  std::size_t excluded = 0;
  ConvexHull3 position_hull;     // (x, y, z) in meters
  ConvexHull3 orientation_hull;  // (roll, pitch, yaw) in degrees
  /// Three-fold lobing of the x-y cross-section.
  TriangularProfile xy_profile;
};

/// Throws std::invalid_argument when no usable sample remains.
WorkspaceExtents workspace_extents(const std::vector<WorkspaceSample>& samples);

struct CorrelationMatrix {
  /// Pearson coefficients over pose axes (x y z roll pitch yaw); NaN where
  /// an axis has zero variance.
  std::array<std::array<double, 6>, 6> r{};
  std::array<bool, 6> defined{};

  double operator()(std::size_t i, std::size_t j) const { return r[i][j]; }
};

/// Throws std::invalid_argument with fewer than 3 usable samples.
CorrelationMatrix correlation_matrix(const std::vector<WorkspaceSample>& samples);
CorrelationMatrix correlation_matrix(const std::vector<Pose6>& poses);

}  // namespace soft_stewart
