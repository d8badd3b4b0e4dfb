#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "soft_stewart/plant.hpp"

using namespace soft_stewart;

namespace {

double peak_vertical_speed(double payload) {
  PlantConfig cfg;
  Plant p(cfg, payload);
  p.settle(JointVector::uniform(0.0), 3.0);
  double z = p.state().pose.z, vmax = 0.0;
  for (int i = 0; i < 3000; ++i) {
    p.step(JointVector::uniform(270.0));
    vmax = std::max(vmax, std::abs(p.state().pose.z - z) / cfg.dt());
    z = p.state().pose.z;
  }
  return vmax;
}

JointVector roll_command(const PlatformGeometry& g, double amp_deg, double f, double t) {
  const Pose6 q{0, 0, 0.28, deg2rad(amp_deg) * std::sin(2 * kPi * f * t), 0, 0};
  return lengths_to_joints(inverse_kinematics(q, g), g);
}

// Roll amplitude of the plate over its quasi-static amplitude at f.
double modal_gain(double f) {
  PlantConfig cfg;
  Plant p(cfg);
  const auto& g = cfg.geometry;
  p.settle(roll_command(g, 1.0, f, 0.0), 2.0);
  double t = 0.0, lo = 1e9, hi = -1e9, qlo = 1e9, qhi = -1e9;
  for (int i = 0; i < 8000; ++i) {
    p.step(roll_command(g, 1.0, f, t));
    t += cfg.dt();
    if (i < 4000) continue;
    lo = std::min(lo, p.state().pose.roll);
    hi = std::max(hi, p.state().pose.roll);
    qlo = std::min(qlo, p.state().quasi_static.roll);
    qhi = std::max(qhi, p.state().quasi_static.roll);
  }
  return (hi - lo) / (qhi - qlo);
}

}  // namespace

TEST_CASE("config invariants") {
  PlantConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  for (const auto& m : cfg.modal_peaks) CHECK(cfg.sim_rate >= 20 * m.freq_hz);
  CHECK(cfg.working_load < cfg.max_load);
  cfg.sim_rate = 300.0;
  CHECK_THROWS(cfg.validate());
  cfg = PlantConfig{};
  cfg.working_load = 4.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("holding a command settles onto the elastic equilibrium") {
  PlantConfig cfg;
  Plant p(cfg, 0.5);
  JointVector cmd;
  cmd.deg = {40, 200, 120, 90, 10, 250};
  auto gap = [&] {
    const Pose6 b = p.state().pose;
    const Pose6 eq = apply_load_sag(p.equilibrium().solve(p.rest_lengths(), b, 100), 0.5, cfg);
    double d = 0.0, dq = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      d = std::max(d, std::abs(b[k] - eq[k]));
      dq = std::max(dq, std::abs(p.state().quasi_static[k] - eq[k]));
    }
    CHECK(dq < 1e-8);  // struts are home; only the modes still ring
    return d;
  };
  auto speed = [&] {
    const Pose6 a = p.state().pose;
    p.step(cmd);
    double v = 0.0;
    for (std::size_t k = 0; k < 6; ++k) v = std::max(v, std::abs(p.state().pose[k] - a[k]) / cfg.dt());
    return v;
  };
  for (int i = 0; i < 1000; ++i) p.step(cmd);
  const double v1 = speed();
  for (int i = 0; i < 4000; ++i) p.step(cmd);
  for (int n = 0; n < 6; ++n) CHECK(p.state().joints_deg[n] == doctest::Approx(cmd.deg[n]).epsilon(1e-6));
  CHECK(gap() < 1e-4);
  const double v5 = speed();
  CHECK(v5 < 1e-3);
  CHECK(v5 < 0.05 * v1);
  for (int i = 0; i < 10000; ++i) p.step(cmd);
  CHECK(gap() < 1e-8);
  CHECK(speed() < 1e-7);
}

TEST_CASE("without bending and torsion the plant settles on rigid FK") {
  PlantConfig cfg;
  cfg.compliance.bending_stiffness = 0.0;
  cfg.compliance.torsion_stiffness = 0.0;
  Plant p(cfg);
  JointVector cmd;
  cmd.deg = {100, 160, 120, 90, 140, 110};
  p.settle(cmd, 15.0, false);
  const auto fk = solve_pose_for_lengths(p.rest_lengths(), cfg.geometry, p.state().pose);
  REQUIRE(fk.converged);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(p.state().pose[k] - fk.pose[k]) < 1e-7);
}

TEST_CASE("vertical speed limits") {
  CHECK(peak_vertical_speed(0.0) <= 0.1);
  CHECK(peak_vertical_speed(2.0) <= 0.09);
  CHECK(peak_vertical_speed(0.0) > 0.08);  // the cap is what binds, not something slower
}

TEST_CASE("load sag") {
  PlantConfig cfg;
  const Pose6 p{0.01, -0.02, 0.27, 0.05, -0.03, 0.1};
  CHECK(apply_load_sag(p, 0.0, cfg) == p);

  oracle::Layout lay;
  const auto lo = oracle::lower_angles(lay);
  const auto up = oracle::upper_angles(lay);
  const auto t = oracle::plate(p.x, p.y, p.z, p.roll, p.pitch, p.yaw);
  double cos_sum = 0.0;
  for (int n = 0; n < 6; ++n) {
    const oracle::V4 a{lay.r_lower * std::cos(lo[n]), lay.r_lower * std::sin(lo[n]), 0, 1};
    const oracle::V4 b = oracle::xform(t, {lay.r_upper * std::cos(up[n]), lay.r_upper * std::sin(up[n]), 0, 1});
    const double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
    cos_sum += dz / std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  const double expected = 2.0 * 9.81 / (6 * 4000.0 * cos_sum / 6.0);
  const Pose6 s = apply_load_sag(p, 2.0, cfg);
  CHECK(p.z - s.z == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p.z - s.z == doctest::Approx(0.0008).epsilon(0.1));
  CHECK(s.x == p.x);
  CHECK(s.roll == p.roll);

  const double one = p.z - apply_load_sag(p, 1.3, cfg).z;
  const double two = p.z - apply_load_sag(p, 2.6, cfg).z;
  CHECK(two == doctest::Approx(2 * one).epsilon(1e-12));
  CHECK_THROWS(apply_load_sag(p, -1.0, cfg));
}

TEST_CASE("buckling classes") {
  PlantConfig cfg;
  CHECK(check_buckling(2.0, cfg).load_class == LoadClass::Full);
  CHECK(check_buckling(3.5, cfg).load_class == LoadClass::Partial);
  CHECK(check_buckling(5.0, cfg).load_class == LoadClass::Infeasible);
  CHECK(check_buckling(0.0, cfg).usable_fraction == 1.0);
  const auto partial = check_buckling(3.0, cfg);
  CHECK(partial.usable_fraction > 0.0);
  CHECK(partial.usable_fraction < 1.0);
  CHECK(partial.buckle_joint_deg < 270.0);

  Plant p(cfg, 3.5);
  p.settle(JointVector::uniform(270.0), 2.0);
  CHECK(p.state().any_buckled());
  for (double d : p.state().joints_deg) CHECK(d <= partial.buckle_joint_deg + 1e-9);
}

TEST_CASE("imu without noise is the pose 8 ms ago") {
  PlantConfig cfg;
  cfg.imu.noise_position = 0.0;
  cfg.imu.noise_angle = 0.0;
  Plant p(cfg);
  ImuSensor imu(cfg.imu);
  std::mt19937_64 rng(1);
  std::vector<std::pair<double, Pose6>> hist;
  int samples = 0;
  for (int i = 0; i < 1000; ++i) {
    p.step(roll_command(cfg.geometry, 3.0, 2.0, i * cfg.dt()));
    hist.emplace_back(p.state().time, p.state().pose);
    if (auto s = imu.update(p.state(), rng); s && i > 20) {
      ++samples;
      const double want = p.state().time - 0.008;
      const auto it = std::find_if(hist.begin(), hist.end(), [&](auto& h) { return std::abs(h.first - want) < 1e-9; });
      REQUIRE(it != hist.end());
      for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs((*s)[k] - it->second[k]) < 1e-12);
    }
  }
  CHECK(samples == doctest::Approx(100).epsilon(0.05));
}

TEST_CASE("imu noise is unbiased") {
  ImuParams ip;
  std::mt19937_64 rng(9);
  const Pose6 truth{0.01, 0.02, 0.28, 0.1, -0.1, 0.05};
  std::array<double, 6> mean{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Pose6 m = measured_pose(truth, ip, rng);
    for (std::size_t k = 0; k < 6; ++k) mean[k] += m[k] / n;
  }
  for (std::size_t k = 0; k < 6; ++k) {
    const double sigma = k < 3 ? ip.noise_position : ip.noise_angle;
    CHECK(std::abs(mean[k] - truth[k]) < 5 * sigma / std::sqrt(double(n)));
  }
}

TEST_CASE("modal peaks lift the plate above its quasi-static motion") {
  const double at4 = modal_gain(4.0), at5 = modal_gain(5.0), at20 = modal_gain(20.0);
  CHECK(at4 > 1.2);
  CHECK(at20 > 1.2);
  CHECK(at4 > at5);
}

TEST_CASE("determinism") {
  PlantConfig cfg;
  Plant a(cfg, 1.0), b(cfg, 1.0);
  ImuSensor ia(cfg.imu), ib(cfg.imu);
  std::mt19937_64 ra(4), rb(4);
  for (int i = 0; i < 1500; ++i) {
    const auto cmd = roll_command(cfg.geometry, 5.0, 3.0, i * cfg.dt());
    a.step(cmd);
    b.step(cmd);
    const auto sa = ia.update(a.state(), ra);
    const auto sb = ib.update(b.state(), rb);
    REQUIRE(sa.has_value() == sb.has_value());
    if (sa) CHECK(*sa == *sb);
    REQUIRE(a.state().pose == b.state().pose);
    REQUIRE(a.state().joints_deg == b.state().joints_deg);
  }
}

TEST_CASE("modal energy decays once the command holds still") {
  PlantConfig cfg;
  Plant p(cfg);
  for (int i = 0; i < 1000; ++i) p.step(roll_command(cfg.geometry, 2.0, 4.0, i * cfg.dt()));
  const JointVector hold = p.state().commanded;
  for (int i = 0; i < 400; ++i) p.step(hold);
  double e = p.state().modal_energy(cfg.modal_peaks);
  REQUIRE(e > 0.0);
  const double e0 = e;
  for (int i = 0; i < 4000; ++i) {
    p.step(hold);
    const double next = p.state().modal_energy(cfg.modal_peaks);
    CHECK(next <= e * (1 + 1e-9) + 1e-18);
    e = next;
  }
  CHECK(e < 0.1 * e0);
}
