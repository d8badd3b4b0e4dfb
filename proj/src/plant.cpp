#include "soft_stewart/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace soft_stewart {

void PlantConfig::validate() const {
  geometry.validate();
  if (!(sim_rate > 0.0)) throw std::invalid_argument("plant: sim_rate must be positive");
  double highest = 0.0;
  for (const auto& m : modal_peaks) {
    if (!(m.freq_hz > 0.0) || !(m.damping > 0.0))
      throw std::invalid_argument("plant: modal peaks need positive frequency and damping");
    highest = std::max(highest, m.freq_hz);
  }
  if (sim_rate < 20.0 * highest)
    throw std::invalid_argument("plant: sim_rate must be at least 20x the highest modal frequency");
  if (!(working_load < max_load)) throw std::invalid_argument("plant: working_load must be below max_load");
  if (!(servo.natural_freq_hz > 0.0) || !(servo.damping > 0.0) || servo.latency < 0.0)
    throw std::invalid_argument("plant: invalid servo parameters");
  if (!(compliance.axial_stiffness > 0.0) || compliance.bending_stiffness < 0.0 ||
      compliance.torsion_stiffness < 0.0)
    throw std::invalid_argument("plant: invalid compliance parameters");
  if (!(hsa.max_extension > 0.0)) throw std::invalid_argument("plant: invalid HSA extension");
  if (!(partial_usable_fraction > 0.0 && partial_usable_fraction <= 1.0))
    throw std::invalid_argument("plant: partial_usable_fraction must lie in (0, 1]");
}

const char* to_string(LoadClass c) {
  switch (c) {
    case LoadClass::Full: return "FULL";
    case LoadClass::Partial: return "PARTIAL";
    case LoadClass::Infeasible: return "INFEASIBLE";
  }
  return "?";
}

bool PlantState::any_buckled() const {
  return std::any_of(buckled.begin(), buckled.end(), [](bool b) { return b; });
}

double PlantState::modal_energy(const std::vector<ModalPeak>& peaks) const {
  double e = 0.0;
  for (const auto& axis : modes) {
    for (std::size_t i = 0; i < axis.size() && i < peaks.size(); ++i) {
      const double w = 2.0 * kPi * peaks[i].freq_hz;
      e += 0.5 * axis[i].qdot * axis[i].qdot + 0.5 * w * w * axis[i].q * axis[i].q;
    }
  }
  return e;
}

FeasibilityReport check_buckling(double payload_mass, const PlantConfig& cfg) {
  const PlatformGeometry& g = cfg.geometry;
  FeasibilityReport r;
  if (payload_mass <= cfg.working_load) {
    r.load_class = LoadClass::Full;
    r.usable_fraction = 1.0;
    r.buckle_joint_deg = g.joint_max_deg;
  } else if (payload_mass <= cfg.max_load) {
    // Usable joint-space volume is the sixth power of the per-joint fraction.
    r.load_class = LoadClass::Partial;
    r.usable_fraction = cfg.partial_usable_fraction;
    r.buckle_joint_deg =
        g.joint_min_deg + (g.joint_max_deg - g.joint_min_deg) * std::pow(cfg.partial_usable_fraction, 1.0 / 6.0);
  } else {
    r.load_class = LoadClass::Infeasible;
    r.usable_fraction = 0.0;
    r.buckle_joint_deg = g.joint_min_deg;
  }
  return r;
}

FeasibilityReport check_buckling(const PlantState& state, const PlantConfig& cfg) {
  return check_buckling(state.payload_mass, cfg);
}

Pose6 apply_load_sag(const Pose6& pose, double payload_mass, const PlantConfig& cfg) {
  if (payload_mass < 0.0) throw std::invalid_argument("apply_load_sag: negative payload");
  if (payload_mass == 0.0) return pose;
  const StrutAnchors anchors = strut_anchors(cfg.geometry);
  const Eigen::Matrix3d r = rotation_matrix(pose.roll, pose.pitch, pose.yaw);
  double cos_sum = 0.0;
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const Eigen::Vector3d chord = pose.translation() + r * anchors.upper[n] - anchors.lower[n];
    cos_sum += chord.z() / chord.norm();
  }
  const double cos_tilt = cos_sum / static_cast<double>(kStrutCount);
  Pose6 out = pose;
  out.z -= payload_mass * kGravity / (6.0 * cfg.compliance.axial_stiffness * cos_tilt);
  return out;
}

SecondOrderStep SecondOrderStep::make(double omega, double zeta, double input_gain, double dt) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = 1.0;
  m(1, 0) = -omega * omega;
  m(1, 1) = -2.0 * zeta * omega;
  m(1, 2) = input_gain;
  const Eigen::Matrix3d e = (m * dt).exp();
  SecondOrderStep s;
  s.a11 = e(0, 0);
  s.a12 = e(0, 1);
  s.a21 = e(1, 0);
  s.a22 = e(1, 1);
  s.b1 = e(0, 2);
  s.b2 = e(1, 2);
  return s;
}

Plant::Plant(PlantConfig cfg, double payload_mass)
    : cfg_(std::move(cfg)), equilibrium_(cfg_.geometry, cfg_.compliance) {
  cfg_.validate();
  state_.payload_mass = payload_mass;
  state_.feasibility = check_buckling(payload_mass, cfg_);
  reset(JointVector::uniform(cfg_.geometry.joint_min_deg));
}

double Plant::rest_length(std::size_t n, double deg) const {
  const PlatformGeometry& g = cfg_.geometry;
  const double u = (deg - g.joint_min_deg) / (g.joint_max_deg - g.joint_min_deg);
  const double shape = u + cfg_.hsa.curvature * u * (1.0 - u);
  return g.neutral_strut_length + cfg_.hsa.max_extension * cfg_.hsa.gain_scale[n] * shape;
}

StrutLengths Plant::rest_lengths() const {
  StrutLengths l{};
  for (std::size_t n = 0; n < kStrutCount; ++n) l[n] = rest_length(n, state_.joints_deg[n]);
  return l;
}

double Plant::heave_rate_limit() const {
  const PlatformGeometry& g = cfg_.geometry;
  const double range = g.joint_max_deg - g.joint_min_deg;
  const double max_scale = *std::max_element(cfg_.hsa.gain_scale.begin(), cfg_.hsa.gain_scale.end());
  const double slope = cfg_.hsa.max_extension * max_scale * (1.0 + cfg_.hsa.curvature) / range;  // m/deg
  const double z0 = equilibrium_.neutral_pose().z;
  const double dz_dl = g.neutral_strut_length / z0;
  const double speed = cfg_.unloaded_speed * std::max(0.0, 1.0 - state_.payload_mass / cfg_.stall_load);
  // the plate lags the struts and overshoots their speed; leave room for that
  const double zeta = cfg_.plate_damping;
  const double overshoot = zeta < 1.0 ? std::exp(-zeta * kPi / std::sqrt(1.0 - zeta * zeta)) : 0.0;
  return speed / (slope * dz_dl * (1.0 + overshoot));
}

void Plant::set_payload(double kg) {
  if (kg < 0.0) throw std::invalid_argument("payload must be non-negative");
  state_.payload_mass = kg;
  state_.feasibility = check_buckling(kg, cfg_);
}

void Plant::reset(const JointVector& joints) {
  const PlatformGeometry& g = cfg_.geometry;
  const double time = state_.time;
  const double payload = state_.payload_mass;
  state_ = PlantState{};
  state_.time = time;
  state_.payload_mass = payload;
  state_.feasibility = check_buckling(payload, cfg_);
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    state_.joints_deg[n] = std::clamp(joints.deg[n], g.joint_min_deg, g.joint_max_deg);
    state_.commanded.deg[n] = state_.joints_deg[n];
  }
  for (auto& axis : state_.modes) axis.assign(cfg_.modal_peaks.size(), ModalState{});
  servo_target_ = state_.commanded;
  pending_.clear();

  const StrutLengths rest = rest_lengths();
  double mean = 0.0;
  for (double l : rest) mean += l / static_cast<double>(kStrutCount);
  Pose6 guess = equilibrium_.neutral_pose();
  guess.z = height_for_uniform_length(g, mean);
  elastic_pose_ = equilibrium_.solve(rest, guess, 100);
  solved_lengths_ = rest;
  state_.quasi_static = apply_load_sag(elastic_pose_, payload, cfg_);
  state_.pose = state_.quasi_static;
  for (std::size_t i = 0; i < 6; ++i) state_.plate_pos[i] = state_.quasi_static[i];
}

const SecondOrderStep& Plant::plate_step(std::size_t axis, double dt) {
  if (dt != cached_dt_) {
    cached_dt_ = dt;
    for (std::size_t i = 0; i < 6; ++i) {
      const double w = 2.0 * kPi * cfg_.plate_freq_hz[i];
      plate_steps_[i] = SecondOrderStep::make(w, cfg_.plate_damping, w * w, dt);
    }
    modal_steps_.clear();
    for (const auto& m : cfg_.modal_peaks)
      modal_steps_.push_back(SecondOrderStep::make(2.0 * kPi * m.freq_hz, m.damping, 1.0, dt));
  }
  return plate_steps_[axis];
}

const SecondOrderStep& Plant::modal_step(std::size_t peak, double dt) {
  plate_step(0, dt);
  return modal_steps_[peak];
}

void Plant::advance_servos(const JointVector& command, double dt) {
  const PlatformGeometry& g = cfg_.geometry;
  JointVector clamped;
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    clamped.deg[n] = std::clamp(command.deg[n], g.joint_min_deg, g.joint_max_deg);
    clamped.saturated[n] = command.saturated[n] || clamped.deg[n] != command.deg[n];
  }
  state_.commanded = clamped;
  pending_.emplace_back(state_.time + cfg_.servo.latency, clamped);
  while (!pending_.empty() && pending_.front().first <= state_.time + 1e-12) {
    servo_target_ = pending_.front().second;
    pending_.pop_front();
  }

  const double w = 2.0 * kPi * cfg_.servo.natural_freq_hz;
  const double zeta = cfg_.servo.damping;
  const double buckle = state_.feasibility.buckle_joint_deg;
  std::array<double, kStrutCount> rate{};
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const double err = servo_target_.deg[n] - state_.joints_deg[n];
    const double acc = w * w * err - 2.0 * zeta * w * state_.joint_rates_deg_s[n];
    rate[n] = std::clamp(state_.joint_rates_deg_s[n] + acc * dt, -cfg_.servo.max_rate_deg_s,
                         cfg_.servo.max_rate_deg_s);
  }

  double mean_rate = 0.0;
  for (double r : rate) mean_rate += r / static_cast<double>(kStrutCount);
  const double cap = heave_rate_limit();
  if (std::abs(mean_rate) > cap) {
    const double excess = mean_rate - std::copysign(cap, mean_rate);
    for (double& r : rate) r -= excess;
  }

  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const double before = rest_length(n, state_.joints_deg[n]);
    double next = state_.joints_deg[n] + rate[n] * dt;
    state_.buckled[n] = servo_target_.deg[n] > buckle;
    if (next > buckle && rate[n] > 0.0) {
      next = std::max(state_.joints_deg[n], std::min(next, buckle));
      if (next <= state_.joints_deg[n]) rate[n] = 0.0;
    }
    if (next <= g.joint_min_deg || next >= g.joint_max_deg) {
      next = std::clamp(next, g.joint_min_deg, g.joint_max_deg);
      rate[n] = 0.0;
    }
    state_.joints_deg[n] = next;
    state_.joint_rates_deg_s[n] = rate[n];
    state_.extension_rates[n] = (rest_length(n, next) - before) / dt;
  }
}

void Plant::update_pose(double dt, bool solve_equilibrium) {
  if (solve_equilibrium) {
    const StrutLengths rest = rest_lengths();
    double change = 0.0;
    for (std::size_t n = 0; n < kStrutCount; ++n) change = std::max(change, std::abs(rest[n] - solved_lengths_[n]));
    if (change > 1e-13) {
      elastic_pose_ = equilibrium_.solve(rest, elastic_pose_);
      solved_lengths_ = rest;
    }
    state_.quasi_static = apply_load_sag(elastic_pose_, state_.payload_mass, cfg_);
  }

  std::array<double, 3> angular_acc{};
  for (std::size_t i = 0; i < 6; ++i) {
    const SecondOrderStep& s = plate_step(i, dt);
    const double w = 2.0 * kPi * cfg_.plate_freq_hz[i];
    const double u = state_.quasi_static[i];
    const double acc = w * w * (u - state_.plate_pos[i]) - 2.0 * cfg_.plate_damping * w * state_.plate_vel[i];
    if (i >= 3) angular_acc[i - 3] = acc;
    s.apply(state_.plate_pos[i], state_.plate_vel[i], u);
  }

  for (std::size_t i = 0; i < 6; ++i) state_.pose[i] = state_.plate_pos[i];
  for (std::size_t a = 0; a < 3; ++a) {
    auto& modes = state_.modes[a];
    for (std::size_t k = 0; k < modes.size(); ++k) {
      modal_step(k, dt).apply(modes[k].q, modes[k].qdot, angular_acc[a]);
      state_.pose[3 + a] += cfg_.modal_peaks[k].gain * modes[k].q;
    }
  }
}

void Plant::step(const JointVector& command) { step(command, cfg_.dt()); }

void Plant::step(const JointVector& command, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant step: dt must be positive");
  advance_servos(command, dt);
  update_pose(dt, true);
  state_.time += dt;
}

Plant::SettleResult Plant::settle(const JointVector& command, double max_time, bool short_circuit) {
  constexpr int kCheckEvery = 10;
  const double dt = cfg_.dt();
  const int total = static_cast<int>(std::lround(max_time / dt));
  const int needed_quiet = static_cast<int>(std::lround(0.2 / (dt * kCheckEvery)));
  Pose6 last = state_.pose;
  int quiet = 0;
  SettleResult result;
  for (int i = 1; i <= total; ++i) {
    const bool check = (i % kCheckEvery == 0) || i == total;
    advance_servos(command, dt);
    update_pose(dt, check);
    state_.time += dt;
    result.elapsed += dt;
    if (!check) continue;
    double change = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double d = state_.pose[k] - last[k];
      change = std::max(change, std::abs(k < 3 ? d : rad2deg(d)));
    }
    last = state_.pose;
    quiet = change < 1e-5 * kCheckEvery ? quiet + 1 : 0;
    if (quiet >= needed_quiet) {
      result.settled = true;
      if (short_circuit) break;
    }
  }
  return result;
}

Pose6 measured_pose(const Pose6& true_pose, const ImuParams& params, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Pose6 out = true_pose;
  for (std::size_t i = 0; i < 6; ++i) {
    const double sigma = i < 3 ? params.noise_position : params.noise_angle;
    const double n = unit(rng);
    if (sigma > 0.0) out[i] += sigma * n;
  }
  return out;
}

Pose6 ImuSensor::delayed_pose(double t) const {
  if (history_.empty()) return {};
  if (t <= history_.front().first) return history_.front().second;
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    if (it->first <= t) {
      const auto next = it.base();
      if (next == history_.end() || next->first == it->first) return it->second;
      const double a = (t - it->first) / (next->first - it->first);
      Pose6 p;
      for (std::size_t i = 0; i < 6; ++i) p[i] = (1.0 - a) * it->second[i] + a * next->second[i];
      return p;
    }
  }
  return history_.front().second;
}

std::optional<Pose6> ImuSensor::update(const PlantState& state, std::mt19937_64& rng) {
  history_.emplace_back(state.time, state.pose);
  while (history_.size() > 2 && history_[1].first < state.time - params_.latency - 0.05) history_.pop_front();
  if (!primed_) {
    primed_ = true;
    next_sample_ = state.time;
  }
  if (state.time + 1e-12 < next_sample_) return std::nullopt;
  next_sample_ += 1.0 / params_.rate_hz;
  latest_ = measured_pose(delayed_pose(state.time - params_.latency), params_, rng);
  return latest_;
}

}  // namespace soft_stewart
