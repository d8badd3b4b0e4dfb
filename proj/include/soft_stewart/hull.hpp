#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace soft_stewart {

/// Convex hull of a 3D point set, built incrementally.
struct ConvexHull3 {
  std::vector<Eigen::Vector3d> points;        // input copy
  std::vector<std::array<int, 3>> faces;      // outward-facing triangles
  std::vector<int> vertices;                  // sorted indices on the hull
  bool degenerate = false;                    // all points coplanar (or fewer than 4)

  double volume() const;
  double area() const;
  /// True when p is inside or within `tol` of the boundary.
  bool contains(const Eigen::Vector3d& p, double tol = 1e-9) const;
};

ConvexHull3 convex_hull(const std::vector<Eigen::Vector3d>& points, double eps = 1e-12);

/// Counter-clockwise 2D hull (monotone chain); collinear points dropped.
std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> points);
double polygon_area(const std::vector<Eigen::Vector2d>& polygon);

/// Three-fold shape of a planar point cloud from the third harmonic of its
/// hull support function h(theta), sampled at 360 directions about the
/// hull centroid. An equilateral triangle gives amplitude 0.25, a disc 0.
struct TriangularProfile {
  double amplitude = 0.0;              // harmonic magnitude / mean support
  std::array<double, 3> vertex_deg{};  // directions of the lobes, ascending
};
TriangularProfile triangular_profile(const std::vector<Eigen::Vector2d>& points);

}  // namespace soft_stewart
