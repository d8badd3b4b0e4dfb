#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soft_stewart/config.hpp"
#include "soft_stewart/learned_ik.hpp"
#include "soft_stewart/metrics.hpp"
#include "soft_stewart/run.hpp"
#include "soft_stewart/sweep.hpp"
#include "soft_stewart/workspace.hpp"

namespace soft_stewart {

// Every run_* function works without a RunDirectory; pass one to persist
// outputs. Trials use seeds derived from the master seed, so any subset
// can be replayed on its own.

struct TraceTrial {
  char letter = 'H';
  std::size_t position = 0;  // index in the letter sequence
  int trial = 0;
  std::uint64_t seed = 0;
  std::size_t waypoints = 0;
  double duration = 0.0;  // simulated seconds
  TraceError error;
  bool aborted = false;
  std::string diagnostic;
  /// Object position every 10 ms, time from trial start.
  Trajectory trajectory;
};

/// One letter, one trial: the puck starts at rest on the first waypoint.
/// Rows of `table` (may be null) get every `record_every`-th plant step.
TraceTrial run_trace_trial(const ExperimentConfig& cfg, char letter, std::uint64_t seed, CsvTable* table = nullptr);

struct TraceReport {
  std::vector<TraceTrial> trials;
  std::map<char, double> letter_mse_cm2;  // mean over that letter's completed trials
  double overall_mse_cm2 = 0.0;
  std::size_t aborted = 0;
};

TraceReport run_trace(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out = nullptr);

struct DisturbTrial {
  double direction_deg = 0.0;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  double impulse_time = 0.0;
  RejectionResult rejection;
  bool aborted = false;
  std::string diagnostic;
  Trajectory trajectory;  // every 10 ms from the start of stabilization
};

/// Stabilize, kick, watch for the configured horizon. A zero-magnitude kick
/// counts as fully rejected.
DisturbTrial run_disturb_trial(const ExperimentConfig& cfg, double direction_deg, double magnitude, std::uint64_t seed,
                               CsvTable* table = nullptr);

struct DisturbReport {
  std::vector<DisturbTrial> trials;
  double worst_rejection = 1.0;
};

DisturbReport run_disturb(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out = nullptr);

struct SweepReport {
  std::vector<BodeResult> axes;
};

SweepReport run_sweep(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out = nullptr);

struct ScanReport {
  std::vector<WorkspaceSample> samples;
  WorkspaceExtents extents;
  CorrelationMatrix correlation;
  std::uint64_t shuffle_seed = 0;
};

ScanReport run_scan(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out = nullptr);

struct TrainIkReport {
  ScanReport scan;
  IkDataset dataset;
  TrainResult training;
};

/// Scan, augment, split and train.
TrainIkReport run_train_ik(const ExperimentConfig& cfg, std::uint64_t seed, RunDirectory* out = nullptr);

struct EvalIkReport {
  std::vector<Pose6> targets;
  IkErrorReport report;
};

/// Scores `model` against rigid IK on fresh poses. Without a model the
/// training pipeline runs first with the same seed.
EvalIkReport run_eval_ik(const ExperimentConfig& cfg, std::uint64_t seed, const std::optional<Mlp>& model,
                         RunDirectory* out = nullptr);

/// JSON forms shared by the CLI and the tests.
nlohmann::json to_json(const BodeResult& r);
nlohmann::json to_json(const WorkspaceExtents& e);
nlohmann::json to_json(const CorrelationMatrix& c);
nlohmann::json to_json(const IkErrorReport& r);

}  // namespace soft_stewart
