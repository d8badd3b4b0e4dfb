#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "soft_stewart/compliance.hpp"
#include "soft_stewart/geometry.hpp"

namespace soft_stewart {

/// Extension of a physical HSA as a function of servo rotation. The rigid
/// model assumes geometry.max_extension over the joint range; the real
/// struts extend further and not quite linearly.
struct HsaParams {
  double max_extension = 0.062;  // m at the upper joint limit
  double curvature = 0.12;       // u + curvature * u * (1 - u), u = angle / range
  std::array<double, kStrutCount> gain_scale = {1.01, 0.99, 1.0, 1.015, 0.985, 1.0};
};

struct ServoParams {
  double natural_freq_hz = 18.0;
  double damping = 0.7;
  double latency = 0.012;           // s, dead time inside the servo bus
  double max_rate_deg_s = 3000.0;   // per joint
};

/// Lightly damped structural resonance excited by plate angular acceleration.
struct ModalPeak {
  double freq_hz = 0.0;
  double damping = 0.0;
  double gain = 0.0;
};

struct ImuParams {
  double rate_hz = 100.0;
  double latency = 0.008;
  double noise_position = 0.0002;       // m
  double noise_angle = deg2rad(0.05);   // rad
};

struct PlantConfig {
  PlatformGeometry geometry = PlatformGeometry::defaults();
  HsaParams hsa;
  ComplianceParams compliance;
  ServoParams servo;

  /// Vertical speed cap of the unloaded platform; shrinks linearly with
  /// payload and reaches zero at stall_load.
  double unloaded_speed = 0.1;
  double stall_load = 20.0;

  /// Plate inertia on the compliant struts, per pose axis (x y z roll pitch yaw).
  std::array<double, 6> plate_freq_hz = {40.0, 40.0, 40.0, 40.0, 34.0, 40.0};
  double plate_damping = 0.7;
  std::vector<ModalPeak> modal_peaks = {
      {4.0, 0.04, 0.02}, {6.0, 0.04, 0.02}, {9.0, 0.04, 0.025}, {20.0, 0.05, 0.06}};

  double working_load = 2.0;
  double max_load = 3.5;
  double partial_usable_fraction = 0.5;

  double sim_rate = 1000.0;
  ImuParams imu;

  /// Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
  double dt() const { return 1.0 / sim_rate; }
};

enum class LoadClass { Full, Partial, Infeasible };
const char* to_string(LoadClass c);

struct FeasibilityReport {
  LoadClass load_class = LoadClass::Full;
  double usable_fraction = 1.0;
  /// Joint angle above which a strut buckles under the current payload.
  double buckle_joint_deg = 270.0;
};

struct ModalState {
  double q = 0.0;
  double qdot = 0.0;
};

struct PlantState {
  double time = 0.0;
  JointVector commanded;
  std::array<double, kStrutCount> joints_deg{};
  std::array<double, kStrutCount> joint_rates_deg_s{};
  std::array<double, kStrutCount> extension_rates{};  // m/s
  Pose6 quasi_static;  // elastic equilibrium plus load sag
  Pose6 pose;          // with plate dynamics and modal perturbation
  std::array<double, 6> plate_pos{};
  std::array<double, 6> plate_vel{};
  /// [rotation axis][peak] for roll, pitch, yaw.
  std::array<std::vector<ModalState>, 3> modes;
  double payload_mass = 0.0;
  FeasibilityReport feasibility;
  std::array<bool, kStrutCount> buckled{};

  bool any_buckled() const;
  /// Sum over modes of 0.5 qdot^2 + 0.5 w^2 q^2.
  double modal_energy(const std::vector<ModalPeak>& peaks) const;
};

FeasibilityReport check_buckling(double payload_mass, const PlantConfig& cfg);
FeasibilityReport check_buckling(const PlantState& state, const PlantConfig& cfg);

/// Lowers the plate by payload * g / (6 k cos(tilt)), tilt being the mean
/// strut inclination from vertical at this pose.
Pose6 apply_load_sag(const Pose6& pose, double payload_mass, const PlantConfig& cfg);

/// Exact zero-order-hold discretization of x'' + 2 zeta w x' + w^2 x = b u.
struct SecondOrderStep {
  double a11 = 1, a12 = 0, a21 = 0, a22 = 1;
  double b1 = 0, b2 = 0;
  static SecondOrderStep make(double omega, double zeta, double input_gain, double dt);
  void apply(double& x, double& v, double u) const {
    const double xn = a11 * x + a12 * v + b1 * u;
    v = a21 * x + a22 * v + b2 * u;
    x = xn;
  }
};

/// Simulated soft Stewart platform. One owner steps it; copies are independent.
class Plant {
 public:
  explicit Plant(PlantConfig cfg, double payload_mass = 0.0);

  const PlantConfig& config() const { return cfg_; }
  const PlantState& state() const { return state_; }
  const CompliantEquilibrium& equilibrium() const { return equilibrium_; }

  /// Places the plant at rest with every joint at `joints`.
  void reset(const JointVector& joints);
  void set_payload(double kg);

  /// Advances by dt (defaults to one simulation period).
  void step(const JointVector& command);
  void step(const JointVector& command, double dt);

  struct SettleResult {
    double elapsed = 0.0;
    bool settled = false;
  };
  /// Holds `command` for up to max_time seconds. With short_circuit the hold
  /// ends once the pose changes by less than 1e-5 (m or deg) per step for
  /// 0.2 s.
  SettleResult settle(const JointVector& command, double max_time = 3.0, bool short_circuit = true);

  /// Strut rest length produced by joint n at `deg`.
  double rest_length(std::size_t n, double deg) const;
  StrutLengths rest_lengths() const;

  /// Joint-rate limit (deg/s) on the mean of the six joints.
  double heave_rate_limit() const;

 private:
  void advance_servos(const JointVector& command, double dt);
  void update_pose(double dt, bool solve_equilibrium);
  const SecondOrderStep& plate_step(std::size_t axis, double dt);
  const SecondOrderStep& modal_step(std::size_t peak, double dt);

  PlantConfig cfg_;
  CompliantEquilibrium equilibrium_;
  PlantState state_;
  Pose6 elastic_pose_;
  StrutLengths solved_lengths_{};
  std::deque<std::pair<double, JointVector>> pending_;
  JointVector servo_target_;
  double cached_dt_ = -1.0;
  std::array<SecondOrderStep, 6> plate_steps_;
  std::vector<SecondOrderStep> modal_steps_;
};

/// IMU abstraction: delayed, noisy, sample-and-hold view of the plate pose.
class ImuSensor {
 public:
  explicit ImuSensor(ImuParams params) : params_(params) {}

  /// Feed every simulation step. Returns a fresh sample when one is due.
  std::optional<Pose6> update(const PlantState& state, std::mt19937_64& rng);
  const Pose6& latest() const { return latest_; }
  const ImuParams& params() const { return params_; }

 private:
  Pose6 delayed_pose(double t) const;

  ImuParams params_;
  std::deque<std::pair<double, Pose6>> history_;
  Pose6 latest_;
  double next_sample_ = 0.0;
  bool primed_ = false;
};

/// One-shot form of ImuSensor for callers that keep their own history:
/// pose plus zero-mean Gaussian noise with the configured sigmas.
Pose6 measured_pose(const Pose6& true_pose, const ImuParams& params, std::mt19937_64& rng);

}  // namespace soft_stewart
