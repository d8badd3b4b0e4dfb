#include <doctest.h>

#include <random>

#include <Eigen/Geometry>

#include "oracles.hpp"
#include "soft_stewart/ball.hpp"
#include "soft_stewart/geometry.hpp"
#include "soft_stewart/metrics.hpp"
#include "soft_stewart/sweep.hpp"
#include "soft_stewart/teleop.hpp"
#include "soft_stewart/workspace.hpp"

using namespace soft_stewart;

namespace {

Pose6 random_pose(std::mt19937_64& rng) {
  const PoseBounds b;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Pose6 p;
  for (std::size_t k = 0; k < 6; ++k) p[k] = b.min[k] + u(rng) * (b.max[k] - b.min[k]);
  return p;
}

Pose6 from_rotation(const Eigen::Vector3d& t, const Eigen::Matrix3d& r) {
  // R = Rz(yaw) Ry(pitch) Rx(roll)
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  return {t.x(), t.y(), t.z(), std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

}  // namespace

TEST_CASE("three-fold symmetry: rotating the pose by 120 deg relabels struts by two") {
  std::mt19937_64 rng(31);
  const PlatformGeometry g;
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(deg2rad(120.0), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  for (int i = 0; i < 200; ++i) {
    const Pose6 p = random_pose(rng);
    const Eigen::Matrix3d r = rotation_matrix(p.roll, p.pitch, p.yaw);
    const Pose6 q = from_rotation(rz * p.translation(), rz * r * rz.transpose());
    REQUIRE((rotation_matrix(q.roll, q.pitch, q.yaw) - rz * r * rz.transpose()).norm() < 1e-12);
    const StrutLengths a = inverse_kinematics(p, g), b = inverse_kinematics(q, g);
    for (std::size_t n = 0; n < 6; ++n) CHECK(std::abs(b[(n + 2) % 6] - a[n]) < 1e-12);
  }
}

TEST_CASE("mirror symmetry across the x axis swaps struts n and 5-n") {
  std::mt19937_64 rng(32);
  for (auto layout : {UpperAnchorLayout::Staggered, UpperAnchorLayout::Aligned}) {
    PlatformGeometry g;
    g.upper_layout = layout;
    for (int i = 0; i < 200; ++i) {
      const Pose6 p = random_pose(rng);
      const Pose6 m{p.x, -p.y, p.z, -p.roll, p.pitch, -p.yaw};
      const StrutLengths a = inverse_kinematics(p, g), b = inverse_kinematics(m, g);
      for (std::size_t n = 0; n < 6; ++n) CHECK(std::abs(b[5 - n] - a[n]) < 1e-12);
    }
  }
}

TEST_CASE("rigid IK lengths are positive and continuous") {
  std::mt19937_64 rng(33);
  const PlatformGeometry g;
  for (int i = 0; i < 200; ++i) {
    Pose6 p = random_pose(rng);
    const StrutLengths a = inverse_kinematics(p, g);
    p.x += 1e-7;
    const StrutLengths b = inverse_kinematics(p, g);
    for (std::size_t n = 0; n < 6; ++n) {
      CHECK(a[n] > 0.0);
      CHECK(std::abs(a[n] - b[n]) <= 1e-7 + 1e-15);  // 1-Lipschitz in translation
    }
  }
}

TEST_CASE("ball dynamics mirror with the plate") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto mode : {BallMode::RollingBall, BallMode::FrictionPuck}) {
    BallParams bp;
    bp.mode = mode;
    for (int trial = 0; trial < 20; ++trial) {
      BallState a, b;
      a.position = {0.02 * u(rng), 0.02 * u(rng)};
      a.velocity = {0.05 * u(rng), 0.05 * u(rng)};
      b.position = {a.position.x(), -a.position.y()};
      b.velocity = {a.velocity.x(), -a.velocity.y()};
      const Pose6 pa{0, 0, 0.28, 0.08 * u(rng), 0.08 * u(rng), 0.3 * u(rng)};
      const Pose6 pb{0, 0, 0.28, -pa.roll, pa.pitch, -pa.yaw};
      for (int i = 0; i < 300; ++i) {
        a = ball_step(a, pa, 0.001, bp);
        b = ball_step(b, pb, 0.001, bp);
        if (a.at_fence || b.at_fence) break;
      }
      CHECK(std::abs(a.position.x() - b.position.x()) < 1e-12);
      CHECK(std::abs(a.position.y() + b.position.y()) < 1e-12);
      CHECK(std::abs(a.velocity.y() + b.velocity.y()) < 1e-12);
    }
  }
}

TEST_CASE("bode of a linear target does not depend on the test amplitude") {
  SweepSpec s;
  s.n_freqs = 8;
  s.segment_duration = 4.0;
  s.gap = 0.5;
  s.command_rate = 0.0;
  s.latency_compensation = 0.0;
  SecondOrderTarget t1(Axis::Roll, 2 * kPi * 9.0, 0.4), t2(Axis::Roll, 2 * kPi * 9.0, 0.4);
  const BodeResult a = run_bode(t1, s);
  s.amplitude_fraction *= 0.3;
  const BodeResult b = run_bode(t2, s);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].magnitude_db == doctest::Approx(b.points[i].magnitude_db).epsilon(1e-6));
    CHECK(a.points[i].phase_deg == doctest::Approx(b.points[i].phase_deg).epsilon(1e-6));
  }
}

TEST_CASE("correlation is invariant to positive affine rescaling and flips with negation") {
  std::mt19937_64 rng(35);
  std::vector<Pose6> poses, scaled;
  for (int i = 0; i < 300; ++i) {
    Pose6 p = random_pose(rng);
    p.pitch = 3.0 * p.x + 0.01 * p.pitch;  // some structure
    poses.push_back(p);
    Pose6 q = p;
    q.x = 5.0 * p.x + 1.0;
    q.y = -2.0 * p.y;
    scaled.push_back(q);
  }
  const auto a = correlation_matrix(poses), b = correlation_matrix(scaled);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const double sign = ((i == 1) != (j == 1)) ? -1.0 : 1.0;
      CHECK(b.r[i][j] == doctest::Approx(sign * a.r[i][j]).epsilon(1e-9));
    }
  CHECK(a.r[4][0] > 0.9);
}

TEST_CASE("trace error is translation invariant and quadratic in scale") {
  std::mt19937_64 rng(36);
  std::normal_distribution<double> n(0.0, 0.004);
  const Path path = letter_path('W');
  const double dwell = 1.0;
  Trajectory tr;
  for (int i = 0; i < static_cast<int>(path.size()) * 100; ++i) {
    const double t = i * 0.01;
    const std::size_t k = static_cast<std::size_t>(t / dwell);
    tr.push_back({t, path[k] + Eigen::Vector2d(n(rng), n(rng))});
  }
  const double base = trace_mse(tr, path, dwell).mse_cm2;
  REQUIRE(base > 0.0);
  const Eigen::Vector2d shift(0.013, -0.02);
  Path moved = path, big = path;
  Trajectory tmoved = tr, tbig = tr;
  for (auto& p : moved) p += shift;
  for (auto& s : tmoved) s.position += shift;
  for (auto& p : big) p *= 2.0;
  for (auto& s : tbig) s.position *= 2.0;
  CHECK(trace_mse(tmoved, moved, dwell).mse_cm2 == doctest::Approx(base).epsilon(1e-9));
  CHECK(trace_mse(tbig, big, dwell).mse_cm2 == doctest::Approx(4.0 * base).epsilon(1e-9));
  // shifting time and start together changes nothing
  Trajectory late = tr;
  for (auto& s : late) s.t += 7.0;
  CHECK(trace_mse(late, path, dwell, 7.0).mse_cm2 == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("teleop map is monotone and stays in bounds") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const PoseBounds b;
  for (int i = 0; i < 500; ++i) {
    std::array<double, 6> a{};
    for (auto& v : a) v = u(rng);
    const Pose6 p = teleop_map(a);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(p[k] >= b.min[k] - 1e-15);
      CHECK(p[k] <= b.max[k] + 1e-15);
      auto up = a;
      up[k] = std::min(1.0, a[k]) + 0.1;
      CHECK(teleop_map(up)[k] >= p[k]);
    }
  }
}
