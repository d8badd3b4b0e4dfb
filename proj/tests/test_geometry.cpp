#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "soft_stewart/geometry.hpp"

using namespace soft_stewart;

namespace {
double angle_deg_mod360(double rad) {
  double d = std::fmod(rad2deg(rad), 360.0);
  return d < 0 ? d + 360.0 : d;
}
}  // namespace

TEST_CASE("pose_to_transform basics") {
  const Transform id = pose_to_transform({});
  CHECK((id - Transform::Identity()).norm() == 0.0);

  const Transform t = pose_to_transform({0, 0, 0.28, 0, 0, 0});
  CHECK((t.block<3, 3>(0, 0) - Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK(t(2, 3) == doctest::Approx(0.28));

  const Transform q = pose_to_transform({0, 0, 0, kPi / 2, 0, 0});
  const Eigen::Vector3d y = q.block<3, 3>(0, 0) * Eigen::Vector3d::UnitY();
  CHECK((y - Eigen::Vector3d::UnitZ()).norm() < 1e-15);

  CHECK_THROWS_AS(pose_to_transform({std::nan(""), 0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("rotation matrix matches the transform chain") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose6 p = oracle::random_pose(rng);
    const auto m = oracle::plate(p.x, p.y, p.z, p.roll, p.pitch, p.yaw);
    const Transform t = pose_to_transform(p);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) CHECK(std::abs(t(r, c) - m[r][c]) < 1e-14);
  }
}

TEST_CASE("transform round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-kPi + 1e-6, kPi), pitch(-kPi / 2 + 0.05, kPi / 2 - 0.05), t(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const Pose6 p{t(rng), t(rng), t(rng), ang(rng), pitch(rng), ang(rng)};
    const Pose6 q = transform_to_pose(pose_to_transform(p));
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(q[k] - p[k]) < 1e-12);
  }
}

TEST_CASE("anchor angles") {
  PlatformGeometry g = PlatformGeometry::defaults();
  const auto a = strut_anchor_angles(g);
  const double expect[6] = {-15.5, 135.5, 104.5, 255.5, 224.5, 15.5};
  for (int n = 0; n < 6; ++n) CHECK(angle_deg_mod360(a[n]) == doctest::Approx(angle_deg_mod360(deg2rad(expect[n]))));

  g.corner_offset = 0.0;
  const auto z = strut_anchor_angles(g);
  CHECK(angle_deg_mod360(z[0]) == doctest::Approx(0.0));
  CHECK(angle_deg_mod360(z[5]) == doctest::Approx(0.0));
  CHECK(angle_deg_mod360(z[1]) == doctest::Approx(120.0));
  CHECK(angle_deg_mod360(z[2]) == doctest::Approx(120.0));
  CHECK(angle_deg_mod360(z[3]) == doctest::Approx(240.0));
  CHECK(angle_deg_mod360(z[4]) == doctest::Approx(240.0));

  // Pair symmetry: the offsets cancel in the sum.
  for (double off : {1.0, 7.0, 15.5, 40.0, 59.0}) {
    g.corner_offset = deg2rad(off);
    double sum = 0.0;
    for (double v : strut_anchor_angles(g)) sum += v;
    CHECK(std::abs(std::remainder(sum, 2 * kPi)) < 1e-12);
  }
}

TEST_CASE("anchor points") {
  const PlatformGeometry g = PlatformGeometry::defaults();
  const StrutAnchors s = strut_anchors(g);
  for (int n = 0; n < 6; ++n) {
    CHECK(s.lower[n].norm() == doctest::Approx(0.0875).epsilon(1e-12));
    CHECK(s.upper[n].norm() == doctest::Approx(0.076).epsilon(1e-12));
    CHECK(s.lower[n].z() == 0.0);
  }
  PlatformGeometry z = g;
  z.corner_offset = 0.0;
  CHECK((strut_anchors(z).lower[0] - Eigen::Vector3d(0.0875, 0, 0)).norm() < 1e-15);
}

TEST_CASE("inverse kinematics examples") {
  PlatformGeometry aligned = PlatformGeometry::defaults();
  aligned.upper_layout = UpperAnchorLayout::Aligned;
  const auto l = inverse_kinematics({0, 0, 0.28, 0, 0, 0}, aligned);
  for (double v : l) CHECK(v == doctest::Approx(0.28024).epsilon(2e-5));
  for (double v : l) CHECK(v == doctest::Approx(l[0]).epsilon(1e-14));
  CHECK(l[0] == doctest::Approx(std::hypot(0.28, 0.0875 - 0.076)).epsilon(1e-14));

  const PlatformGeometry g = PlatformGeometry::defaults();
  StrutLengths prev{};
  for (double z = 0.20; z <= 0.34; z += 0.01) {
    const auto cur = inverse_kinematics({0, 0, z, 0, 0, 0}, g);
    if (z > 0.20)
      for (int n = 0; n < 6; ++n) CHECK(cur[n] > prev[n]);
    prev = cur;
  }
}

TEST_CASE("inverse kinematics matches transform-chain oracle") {
  std::mt19937_64 rng(11);
  for (bool staggered : {true, false}) {
    PlatformGeometry g = PlatformGeometry::defaults();
    g.upper_layout = staggered ? UpperAnchorLayout::Staggered : UpperAnchorLayout::Aligned;
    oracle::Layout lay;
    lay.staggered = staggered;
    for (int i = 0; i < 100; ++i) {
      const Pose6 p = oracle::random_pose(rng);
      const auto a = inverse_kinematics(p, g);
      const auto b = oracle::strut_lengths(p, lay);
      for (int n = 0; n < 6; ++n) CHECK(std::abs(a[n] - b[n]) < 1e-9);
    }
  }
}

TEST_CASE("lengths to joints") {
  const PlatformGeometry g = PlatformGeometry::defaults();
  StrutLengths l;
  l.fill(g.neutral_strut_length);
  auto j = lengths_to_joints(l, g);
  for (int n = 0; n < 6; ++n) {
    CHECK(j.deg[n] == doctest::Approx(0.0));
    CHECK_FALSE(j.saturated[n]);
  }
  l.fill(g.neutral_strut_length + g.max_extension);
  j = lengths_to_joints(l, g);
  for (int n = 0; n < 6; ++n) CHECK(j.deg[n] == doctest::Approx(270.0).epsilon(1e-12));

  l.fill(g.neutral_strut_length - 0.01);
  j = lengths_to_joints(l, g);
  for (int n = 0; n < 6; ++n) {
    CHECK(j.deg[n] == 0.0);
    CHECK(j.saturated[n]);
  }
  CHECK(j.any_saturated());

  l.fill(g.neutral_strut_length + 0.02);
  const auto back = joints_to_lengths(lengths_to_joints(l, g), g);
  for (int n = 0; n < 6; ++n) CHECK(back[n] == doctest::Approx(l[n]).epsilon(1e-14));
}

TEST_CASE("forward kinematics") {
  const PlatformGeometry g = PlatformGeometry::defaults();
  const Pose6 guess{0, 0, 0.28, 0, 0, 0};

  SUBCASE("zero joints sit at the minimum height") {
    const auto r = forward_kinematics(JointVector::uniform(0.0), g, guess);
    REQUIRE(r.converged);
    CHECK(r.pose.z == doctest::Approx(0.253).epsilon(1e-9));
  }
  SUBCASE("equal joints give a level, centered plate") {
    for (double d : {30.0, 135.0, 250.0}) {
      const auto r = forward_kinematics(JointVector::uniform(d), g, guess);
      REQUIRE(r.converged);
      CHECK(std::abs(r.pose.x) < 1e-9);
      CHECK(std::abs(r.pose.y) < 1e-9);
      CHECK(std::abs(r.pose.roll) < 1e-9);
      CHECK(std::abs(r.pose.pitch) < 1e-9);
      CHECK(std::abs(r.pose.yaw) < 1e-9);
    }
  }
  SUBCASE("round trip from a perturbed guess") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1, 1);
    int converged = 0;
    for (int i = 0; i < 50; ++i) {
      const Pose6 p0 = oracle::random_pose(rng);
      Pose6 start = p0;
      start.x += 0.01 * u(rng);
      start.y += 0.01 * u(rng);
      start.z += 0.01 * u(rng);
      for (std::size_t k = 3; k < 6; ++k) start[k] += deg2rad(5.0) * u(rng);
      const auto r = solve_pose_for_lengths(inverse_kinematics(p0, g), g, start);
      if (!r.converged) continue;
      ++converged;
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(r.pose[k] - p0[k]) < 1e-6);
      for (std::size_t k = 3; k < 6; ++k) CHECK(std::abs(r.pose[k] - p0[k]) < 1e-5);
    }
    CHECK(converged >= 49);
  }
}

TEST_CASE("geometry validation") {
  PlatformGeometry g = PlatformGeometry::defaults();
  CHECK_NOTHROW(g.validate());
  g.corner_offset = deg2rad(60.0);
  CHECK_THROWS(g.validate());
  g = PlatformGeometry::defaults();
  g.upper_radius = 0.0;
  CHECK_THROWS(g.validate());
}
