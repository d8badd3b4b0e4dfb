#include "soft_stewart/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include <Eigen/Geometry>

namespace soft_stewart {

namespace {

double orient(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c, const Eigen::Vector3d& p) {
  return (b - a).cross(c - a).dot(p - a);
}

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace

ConvexHull3 convex_hull(const std::vector<Eigen::Vector3d>& pts, double eps) {
  ConvexHull3 h;
  h.points = pts;
  const int n = static_cast<int>(pts.size());
  if (n < 4) {
    h.degenerate = true;
    return h;
  }

  // Scale-aware tolerance.
  double span = 0.0;
  for (const auto& p : pts) span = std::max(span, (p - pts[0]).norm());
  if (span == 0.0) {
    h.degenerate = true;
    return h;
  }
  const double tol = eps * span * span * span;

  // Initial tetrahedron from extreme, non-degenerate points.
  int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  double best = 0.0;
  for (int i = 1; i < n; ++i)
    if (double d = (pts[i] - pts[i0]).norm(); d > best) best = d, i1 = i;
  best = 0.0;
  for (int i = 0; i < n; ++i)
    if (double d = (pts[i1] - pts[i0]).cross(pts[i] - pts[i0]).norm(); d > best) best = d, i2 = i;
  if (i2 < 0 || best <= eps * span * span) {
    h.degenerate = true;
    return h;
  }
  best = 0.0;
  for (int i = 0; i < n; ++i)
    if (double d = std::abs(orient(pts[i0], pts[i1], pts[i2], pts[i])); d > best) best = d, i3 = i;
  if (i3 < 0 || best <= tol) {
    h.degenerate = true;
    return h;
  }

  std::vector<std::array<int, 3>> faces;
  auto add_face = [&](int a, int b, int c, const Eigen::Vector3d& inside) {
    if (orient(pts[a], pts[b], pts[c], inside) > 0.0) std::swap(b, c);
    faces.push_back({a, b, c});
  };
  const Eigen::Vector3d centroid = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  add_face(i0, i1, i2, centroid);
  add_face(i0, i1, i3, centroid);
  add_face(i0, i2, i3, centroid);
  add_face(i1, i2, i3, centroid);

  for (int p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    std::vector<char> visible(faces.size(), 0);
    bool any = false;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const auto& t = faces[f];
      if (orient(pts[t[0]], pts[t[1]], pts[t[2]], pts[p]) > tol) visible[f] = 1, any = true;
    }
    if (!any) continue;

    // Horizon: directed edges of visible faces whose twin is not visible.
    std::map<std::pair<int, int>, int> edges;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!visible[f]) continue;
      const auto& t = faces[f];
      for (int k = 0; k < 3; ++k) edges[{t[k], t[(k + 1) % 3]}]++;
    }
    std::vector<std::array<int, 3>> kept;
    kept.reserve(faces.size());
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (!visible[f]) kept.push_back(faces[f]);
    for (const auto& [e, count] : edges) {
      if (edges.count({e.second, e.first})) continue;
      kept.push_back({e.first, e.second, p});
    }
    faces = std::move(kept);
  }

  h.faces = std::move(faces);
  for (const auto& f : h.faces) h.vertices.insert(h.vertices.end(), f.begin(), f.end());
  std::sort(h.vertices.begin(), h.vertices.end());
  h.vertices.erase(std::unique(h.vertices.begin(), h.vertices.end()), h.vertices.end());
  return h;
}

double ConvexHull3::volume() const {
  if (degenerate) return 0.0;
  double v = 0.0;
  for (const auto& f : faces) v += points[f[0]].dot(points[f[1]].cross(points[f[2]]));
  return v / 6.0;
}

double ConvexHull3::area() const {
  double a = 0.0;
  for (const auto& f : faces) a += 0.5 * (points[f[1]] - points[f[0]]).cross(points[f[2]] - points[f[0]]).norm();
  return a;
}

bool ConvexHull3::contains(const Eigen::Vector3d& p, double tol) const {
  if (degenerate) return false;
  for (const auto& f : faces) {
    const Eigen::Vector3d nrm = (points[f[1]] - points[f[0]]).cross(points[f[2]] - points[f[0]]);
    const double len = nrm.norm();
    if (len == 0.0) continue;
    if (nrm.dot(p - points[f[0]]) / len > tol) return false;
  }
  return true;
}

std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

TriangularProfile triangular_profile(const std::vector<Eigen::Vector2d>& points) {
  TriangularProfile out;
  const auto hull = convex_hull_2d(points);
  if (hull.size() < 3) return out;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& v : hull) c += v / static_cast<double>(hull.size());
  constexpr int kDirs = 360;
  double mean = 0.0, re = 0.0, im = 0.0;
  for (int k = 0; k < kDirs; ++k) {
    const double th = 2.0 * std::numbers::pi * k / kDirs;
    const Eigen::Vector2d u(std::cos(th), std::sin(th));
    double h = -std::numeric_limits<double>::infinity();
    for (const auto& v : hull) h = std::max(h, (v - c).dot(u));
    mean += h / kDirs;
    re += h * std::cos(3.0 * th) / kDirs;
    im += h * std::sin(3.0 * th) / kDirs;
  }
  if (!(mean > 0.0)) return out;
  out.amplitude = 2.0 * std::hypot(re, im) / mean;
  const double phase = std::atan2(im, re) / 3.0;
  for (std::size_t k = 0; k < 3; ++k) {
    double d = std::fmod(phase * 180.0 / std::numbers::pi + 120.0 * static_cast<double>(k) + 360.0, 360.0);
    out.vertex_deg[k] = d > 180.0 ? d - 360.0 : d;
  }
  std::sort(out.vertex_deg.begin(), out.vertex_deg.end());
  return out;
}

}  // namespace soft_stewart
