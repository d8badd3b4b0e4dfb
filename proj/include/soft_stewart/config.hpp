#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "soft_stewart/ball.hpp"
#include "soft_stewart/cascade.hpp"
#include "soft_stewart/mlp.hpp"
#include "soft_stewart/plant.hpp"
#include "soft_stewart/sweep.hpp"

namespace soft_stewart {

struct ScanSettings {
  double increment_deg = 90.0;
  double settle_time = 3.0;
  bool short_circuit = true;
};

struct IkSettings {
  std::size_t n_random = 5904;
  double test_fraction = 0.1;
  std::size_t eval_poses = 100;
  double settle_time = 3.0;
  TrainOptions train;
};

struct TraceSettings {
  std::string letters = "HELLOWORLD";
  int trials = 5;
  /// A trial is aborted once the object stays at the fence this long.
  double pinned_abort = 10.0;
  /// Trajectory files keep one row every n plant steps.
  int record_every = 50;
};

struct DisturbSettings {
  double stabilize = 10.0;
  double magnitude = 0.2;  // m/s
  std::vector<double> directions_deg = {0.0, 120.0, 240.0};
  double horizon = 20.0;
  double settle_window = 0.5;
  double pinned_abort = 10.0;
  int record_every = 10;
};

struct ServeSettings {
  std::string bind_address = "127.0.0.1";
  int port = 8765;
  double telemetry_hz = 30.0;
  double command_hz = 100.0;
  double lease_timeout = 5.0;  // s without a command before the lease lapses
  std::size_t viewer_queue = 8;
  std::string log_level = "info";
};

/// Everything an experiment reads. Defaults match the hardware experiments.
struct ExperimentConfig {
  PlantConfig plant;
  double neutral_height = 0.253;
  BallParams ball;
  BallSensorParams sensor;
  CascadeConfig ball_cascade = CascadeConfig::for_mode(BallMode::RollingBall);
  CascadeConfig puck_cascade = CascadeConfig::for_mode(BallMode::FrictionPuck);
  SweepSpec sweep;
  std::vector<Axis> sweep_axes = {Axis::Roll, Axis::Pitch, Axis::Yaw};
  ScanSettings scan;
  IkSettings ik;
  TraceSettings trace;
  DisturbSettings disturb;
  ServeSettings serve;

  /// Throws ConfigError on any inconsistent value.
  void validate() const;
  /// Plant, object, camera and controller for one object type.
  BalanceConfig balance(BallMode mode) const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// INI text layered over the defaults. Unknown sections or keys, and values
/// that do not parse, throw ConfigError.
ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical form: every key, sorted, full precision.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Lowercase hex SHA-256 of the canonical JSON dump.
std::string config_hash(const ExperimentConfig& cfg);
std::string sha256_hex(const std::string& bytes);

/// Environment overrides for the service (SOFT_STEWART_BIND, SOFT_STEWART_PORT,
/// SOFT_STEWART_LOG_LEVEL).
void apply_environment(ServeSettings& s);

}  // namespace soft_stewart
