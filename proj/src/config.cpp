#include "soft_stewart/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <variant>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "soft_stewart/paths.hpp"

namespace soft_stewart {

namespace {

// Angle stored in radians, written in degrees.
struct Deg {
  double* rad;
};
struct DegList {
  std::vector<double>* values;  // already degrees, kept for readability
};

using Field = std::variant<double*, Deg, int*, bool*, std::string*, std::size_t*, std::array<double, 6>*,
                           DegList, Axis*, std::vector<Axis>*, UpperAnchorLayout*, std::vector<ModalPeak>*>;

struct Binding {
  std::string section;
  std::string key;
  Field field;
};

void bind_pid(std::vector<Binding>& out, const std::string& sec, const std::string& loop, PidGains& g, bool angular) {
  out.push_back({sec, loop + "_kp", &g.kp});
  out.push_back({sec, loop + "_ki", &g.ki});
  out.push_back({sec, loop + "_kd", &g.kd});
  out.push_back({sec, loop + "_derivative_cutoff_hz", &g.derivative_cutoff_hz});
  if (angular) {
    out.push_back({sec, loop + "_integral_limit_deg", Deg{&g.integral_limit}});
    out.push_back({sec, loop + "_output_limit_deg", Deg{&g.output_limit}});
  } else {
    out.push_back({sec, loop + "_integral_limit", &g.integral_limit});
    out.push_back({sec, loop + "_output_limit", &g.output_limit});
  }
}

void bind_cascade(std::vector<Binding>& out, const std::string& sec, CascadeConfig& c) {
  bind_pid(out, sec, "outer", c.outer, false);
  bind_pid(out, sec, "inner", c.inner, true);
  out.push_back({sec, "control_rate", &c.control_rate});
  out.push_back({sec, "max_tilt_deg", Deg{&c.max_tilt}});
  out.push_back({sec, "z_setpoint", &c.z_setpoint});
  out.push_back({sec, "waypoint_dwell", &c.waypoint_dwell});
  out.push_back({sec, "stale_periods", &c.stale_periods});
  out.push_back({sec, "velocity_filter_hz", &c.velocity_filter_hz});
  out.push_back({sec, "position_deadband", &c.position_deadband});
}

std::vector<Binding> bindings(ExperimentConfig& c) {
  std::vector<Binding> b;
  auto& g = c.plant.geometry;
  b.push_back({"geometry", "upper_radius", &g.upper_radius});
  b.push_back({"geometry", "lower_radius", &g.lower_radius});
  b.push_back({"geometry", "corner_offset_deg", Deg{&g.corner_offset}});
  b.push_back({"geometry", "upper_layout", &g.upper_layout});
  b.push_back({"geometry", "neutral_height", &c.neutral_height});
  b.push_back({"geometry", "max_extension", &g.max_extension});
  b.push_back({"geometry", "joint_min_deg", &g.joint_min_deg});
  b.push_back({"geometry", "joint_max_deg", &g.joint_max_deg});

  b.push_back({"hsa", "max_extension", &c.plant.hsa.max_extension});
  b.push_back({"hsa", "curvature", &c.plant.hsa.curvature});
  b.push_back({"hsa", "gain_scale", &c.plant.hsa.gain_scale});

  b.push_back({"compliance", "axial_stiffness", &c.plant.compliance.axial_stiffness});
  b.push_back({"compliance", "bending_stiffness", &c.plant.compliance.bending_stiffness});
  b.push_back({"compliance", "torsion_stiffness", &c.plant.compliance.torsion_stiffness});

  b.push_back({"servo", "natural_freq_hz", &c.plant.servo.natural_freq_hz});
  b.push_back({"servo", "damping", &c.plant.servo.damping});
  b.push_back({"servo", "latency", &c.plant.servo.latency});
  b.push_back({"servo", "max_rate_deg_s", &c.plant.servo.max_rate_deg_s});

  b.push_back({"plant", "unloaded_speed", &c.plant.unloaded_speed});
  b.push_back({"plant", "stall_load", &c.plant.stall_load});
  b.push_back({"plant", "plate_freq_hz", &c.plant.plate_freq_hz});
  b.push_back({"plant", "plate_damping", &c.plant.plate_damping});
  b.push_back({"plant", "modal_peaks", &c.plant.modal_peaks});
  b.push_back({"plant", "working_load", &c.plant.working_load});
  b.push_back({"plant", "max_load", &c.plant.max_load});
  b.push_back({"plant", "partial_usable_fraction", &c.plant.partial_usable_fraction});
  b.push_back({"plant", "sim_rate", &c.plant.sim_rate});

  b.push_back({"imu", "rate_hz", &c.plant.imu.rate_hz});
  b.push_back({"imu", "latency", &c.plant.imu.latency});
  b.push_back({"imu", "noise_position", &c.plant.imu.noise_position});
  b.push_back({"imu", "noise_angle_deg", Deg{&c.plant.imu.noise_angle}});

  b.push_back({"ball", "radius", &c.ball.radius});
  b.push_back({"ball", "mass", &c.ball.mass});
  b.push_back({"ball", "rolling_resistance", &c.ball.rolling_resistance});
  b.push_back({"ball", "static_friction", &c.ball.static_friction});
  b.push_back({"ball", "kinetic_friction", &c.ball.kinetic_friction});
  b.push_back({"ball", "restitution", &c.ball.restitution});
  b.push_back({"ball", "fence_apothem", &c.ball.fence_apothem});

  b.push_back({"sensor", "raw_rate", &c.sensor.raw_rate});
  b.push_back({"sensor", "publish_every", &c.sensor.publish_every});
  b.push_back({"sensor", "window", &c.sensor.window});
  b.push_back({"sensor", "noise", &c.sensor.noise});
  b.push_back({"sensor", "latency", &c.sensor.latency});

  bind_cascade(b, "cascade_ball", c.ball_cascade);
  bind_cascade(b, "cascade_puck", c.puck_cascade);

  b.push_back({"sweep", "axis", &c.sweep.axis});
  b.push_back({"sweep", "axes", &c.sweep_axes});
  b.push_back({"sweep", "n_freqs", &c.sweep.n_freqs});
  b.push_back({"sweep", "f_min", &c.sweep.f_min});
  b.push_back({"sweep", "f_max", &c.sweep.f_max});
  b.push_back({"sweep", "amplitude_fraction", &c.sweep.amplitude_fraction});
  b.push_back({"sweep", "z_offset_fraction", &c.sweep.z_offset_fraction});
  b.push_back({"sweep", "segment_duration", &c.sweep.segment_duration});
  b.push_back({"sweep", "gap", &c.sweep.gap});
  b.push_back({"sweep", "latency_compensation", &c.sweep.latency_compensation});
  b.push_back({"sweep", "min_cycles", &c.sweep.min_cycles});
  b.push_back({"sweep", "command_rate", &c.sweep.command_rate});
  b.push_back({"sweep", "sample_rate", &c.sweep.sample_rate});

  b.push_back({"scan", "increment_deg", &c.scan.increment_deg});
  b.push_back({"scan", "settle_time", &c.scan.settle_time});
  b.push_back({"scan", "short_circuit", &c.scan.short_circuit});

  b.push_back({"ik", "n_random", &c.ik.n_random});
  b.push_back({"ik", "test_fraction", &c.ik.test_fraction});
  b.push_back({"ik", "eval_poses", &c.ik.eval_poses});
  b.push_back({"ik", "settle_time", &c.ik.settle_time});
  b.push_back({"ik", "epochs", &c.ik.train.epochs});
  b.push_back({"ik", "batch_size", &c.ik.train.batch_size});
  b.push_back({"ik", "learning_rate", &c.ik.train.learning_rate});
  b.push_back({"ik", "beta1", &c.ik.train.beta1});
  b.push_back({"ik", "beta2", &c.ik.train.beta2});
  b.push_back({"ik", "epsilon", &c.ik.train.epsilon});
  b.push_back({"ik", "plateau_patience", &c.ik.train.plateau_patience});
  b.push_back({"ik", "decay", &c.ik.train.decay});
  b.push_back({"ik", "min_learning_rate", &c.ik.train.min_learning_rate});

  b.push_back({"trace", "letters", &c.trace.letters});
  b.push_back({"trace", "trials", &c.trace.trials});
  b.push_back({"trace", "pinned_abort", &c.trace.pinned_abort});
  b.push_back({"trace", "record_every", &c.trace.record_every});

  b.push_back({"disturb", "stabilize", &c.disturb.stabilize});
  b.push_back({"disturb", "magnitude", &c.disturb.magnitude});
  b.push_back({"disturb", "directions_deg", DegList{&c.disturb.directions_deg}});
  b.push_back({"disturb", "horizon", &c.disturb.horizon});
  b.push_back({"disturb", "settle_window", &c.disturb.settle_window});
  b.push_back({"disturb", "pinned_abort", &c.disturb.pinned_abort});
  b.push_back({"disturb", "record_every", &c.disturb.record_every});

  b.push_back({"serve", "bind_address", &c.serve.bind_address});
  b.push_back({"serve", "port", &c.serve.port});
  b.push_back({"serve", "telemetry_hz", &c.serve.telemetry_hz});
  b.push_back({"serve", "command_hz", &c.serve.command_hz});
  b.push_back({"serve", "lease_timeout", &c.serve.lease_timeout});
  b.push_back({"serve", "viewer_queue", &c.serve.viewer_queue});
  b.push_back({"serve", "log_level", &c.serve.log_level});
  return b;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError("not a finite number: '" + text + "'");
  return v;
}

long long parse_integer(const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + text + "'");
  }
  if (used != t.size()) throw ConfigError("not an integer: '" + text + "'");
  return v;
}

Axis parse_axis(const std::string& text) {
  const std::string t = trim(text);
  for (std::size_t i = 0; i < kAxisNames.size(); ++i)
    if (t == kAxisNames[i]) return static_cast<Axis>(i);
  throw ConfigError("unknown axis '" + text + "'");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void assign(const Field& f, const std::string& text) {
  std::visit(Overloaded{
                 [&](double* p) { *p = parse_double(text); },
                 [&](Deg d) { *d.rad = deg2rad(parse_double(text)); },
                 [&](int* p) { *p = static_cast<int>(parse_integer(text)); },
                 [&](bool* p) {
                   const std::string t = trim(text);
                   if (t == "true" || t == "1" || t == "yes" || t == "on")
                     *p = true;
                   else if (t == "false" || t == "0" || t == "no" || t == "off")
                     *p = false;
                   else
                     throw ConfigError("not a boolean: '" + text + "'");
                 },
                 [&](std::string* p) { *p = trim(text); },
                 [&](std::size_t* p) {
                   const long long v = parse_integer(text);
                   if (v < 0) throw ConfigError("must be non-negative: '" + text + "'");
                   *p = static_cast<std::size_t>(v);
                 },
                 [&](std::array<double, 6>* p) {
                   const auto parts = split(text, ',');
                   if (parts.size() != 6) throw ConfigError("expected 6 comma-separated values");
                   for (std::size_t i = 0; i < 6; ++i) (*p)[i] = parse_double(parts[i]);
                 },
                 [&](DegList d) {
                   d.values->clear();
                   if (trim(text).empty()) return;
                   for (const auto& part : split(text, ',')) d.values->push_back(parse_double(part));
                 },
                 [&](Axis* p) { *p = parse_axis(text); },
                 [&](std::vector<Axis>* p) {
                   p->clear();
                   for (const auto& part : split(text, ',')) p->push_back(parse_axis(part));
                 },
                 [&](UpperAnchorLayout* p) {
                   const std::string t = trim(text);
                   if (t == "staggered")
                     *p = UpperAnchorLayout::Staggered;
                   else if (t == "aligned")
                     *p = UpperAnchorLayout::Aligned;
                   else
                     throw ConfigError("layout must be staggered or aligned");
                 },
                 [&](std::vector<ModalPeak>* p) {
                   // freq:damping:gain, comma separated
                   p->clear();
                   if (trim(text).empty()) return;
                   for (const auto& part : split(text, ',')) {
                     const auto v = split(part, ':');
                     if (v.size() != 3) throw ConfigError("modal peak must be freq:damping:gain");
                     p->push_back({parse_double(v[0]), parse_double(v[1]), parse_double(v[2])});
                   }
                 },
             },
             f);
}

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json to_json(const Field& f) {
  return std::visit(Overloaded{
                        [](double* p) { return number(*p); },
                        [](Deg d) { return number(rad2deg(*d.rad)); },
                        [](int* p) { return nlohmann::json(*p); },
                        [](bool* p) { return nlohmann::json(*p); },
                        [](std::string* p) { return nlohmann::json(*p); },
                        [](std::size_t* p) { return nlohmann::json(*p); },
                        [](std::array<double, 6>* p) { return nlohmann::json(*p); },
                        [](DegList d) { return nlohmann::json(*d.values); },
                        [](Axis* p) { return nlohmann::json(kAxisNames[static_cast<std::size_t>(*p)]); },
                        [](std::vector<Axis>* p) {
                          nlohmann::json a = nlohmann::json::array();
                          for (Axis x : *p) a.push_back(kAxisNames[static_cast<std::size_t>(x)]);
                          return a;
                        },
                        [](UpperAnchorLayout* p) {
                          return nlohmann::json(*p == UpperAnchorLayout::Staggered ? "staggered" : "aligned");
                        },
                        [](std::vector<ModalPeak>* p) {
                          nlohmann::json a = nlohmann::json::array();
                          for (const auto& m : *p) a.push_back({m.freq_hz, m.damping, m.gain});
                          return a;
                        },
                    },
                    f);
}

void finish(ExperimentConfig& c) {
  auto& g = c.plant.geometry;
  g.servo_gain = g.max_extension / deg2rad(g.joint_max_deg - g.joint_min_deg);
  g.set_neutral_height(c.neutral_height);
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    plant.geometry.validate();
    plant.validate();
    ball_cascade.validate();
    puck_cascade.validate();
    sweep.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(neutral_height > 0.0)) throw ConfigError("geometry: neutral height must be positive");
  if (!(ball.radius > 0.0) || !(ball.mass > 0.0) || ball.fence_apothem <= ball.radius)
    throw ConfigError("ball: radius, mass or fence out of range");
  if (ball.kinetic_friction < 0.0 || ball.static_friction < ball.kinetic_friction)
    throw ConfigError("ball: static friction must be at least the kinetic friction");
  if (!(sensor.raw_rate > 0.0) || sensor.publish_every < 1 || sensor.window < 1 || sensor.noise < 0.0 ||
      sensor.latency < 0.0)
    throw ConfigError("sensor: invalid rate, window or noise");
  if (sweep_axes.empty()) throw ConfigError("sweep: no axes");
  for (Axis a : sweep_axes)
    if (a != Axis::Roll && a != Axis::Pitch && a != Axis::Yaw) throw ConfigError("sweep: axes must be rotations");
  if (!(scan.increment_deg > 0.0) || !(scan.settle_time > 0.0)) throw ConfigError("scan: invalid increment or settle");
  if (!(ik.test_fraction >= 0.0 && ik.test_fraction < 1.0) || !(ik.settle_time > 0.0))
    throw ConfigError("ik: invalid split or settle time");
  if (ik.train.epochs < 1 || ik.train.batch_size < 1 || !(ik.train.learning_rate > 0.0))
    throw ConfigError("ik: invalid training options");
  if (trace.trials < 1 || trace.record_every < 1 || !(trace.pinned_abort > 0.0))
    throw ConfigError("trace: invalid trials or recording");
  const std::string letters = traceable_letters(trace.letters);
  if (letters.empty()) throw ConfigError("trace: no letters");
  for (char ch : letters)
    if (!letter_supported(ch)) throw ConfigError(std::string("trace: unsupported letter '") + ch + "'");
  if (!(disturb.stabilize >= 10.0) || disturb.magnitude < 0.0 || !(disturb.horizon > disturb.settle_window) ||
      !(disturb.settle_window > 0.0) || disturb.record_every < 1)
    throw ConfigError("disturb: stabilize must be at least 10 s, horizon must exceed the settle window");
  if (serve.port < 0 || serve.port > 65535 || !(serve.telemetry_hz > 0.0) || !(serve.command_hz > 0.0) ||
      !(serve.lease_timeout > 0.0) || serve.viewer_queue < 1)
    throw ConfigError("serve: invalid port, rates or queue");
}

BalanceConfig ExperimentConfig::balance(BallMode mode) const {
  BalanceConfig b;
  b.plant = plant;
  b.ball = ball;
  b.ball.mode = mode;
  b.sensor = sensor;
  b.cascade = mode == BallMode::FrictionPuck ? puck_cascade : ball_cascade;
  return b;
}

ExperimentConfig parse_config(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig cfg;
  auto fields = bindings(cfg);
  std::map<std::string, const Field*> index;
  std::map<std::string, bool> sections;
  for (const auto& b : fields) {
    index[b.section + "/" + b.key] = &b.field;
    sections[b.section] = true;
  }
  for (const auto& [section, child] : tree) {
    if (child.empty()) throw ConfigError("key '" + section + "' outside a section");
    if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : child) {
      const auto it = index.find(section + "/" + key);
      if (it == index.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      try {
        assign(*it->second, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError("[" + section + "] " + key + ": " + e.what());
      }
    }
  }
  finish(cfg);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  nlohmann::json j = nlohmann::json::object();
  for (const auto& b : bindings(copy)) j[b.section][b.key] = to_json(b.field);
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(config_to_json(cfg).dump()); }

void apply_environment(ServeSettings& s) {
  if (const char* v = std::getenv("SOFT_STEWART_BIND"); v && *v) s.bind_address = v;
  if (const char* v = std::getenv("SOFT_STEWART_PORT"); v && *v) {
    const long long p = parse_integer(v);
    if (p < 0 || p > 65535) throw ConfigError("SOFT_STEWART_PORT out of range");
    s.port = static_cast<int>(p);
  }
  if (const char* v = std::getenv("SOFT_STEWART_LOG_LEVEL"); v && *v) s.log_level = v;
}

}  // namespace soft_stewart
