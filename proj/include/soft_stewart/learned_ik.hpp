#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "soft_stewart/mlp.hpp"
#include "soft_stewart/plant.hpp"
#include "soft_stewart/workspace.hpp"

namespace soft_stewart {

enum class Split { Train, Test };

struct IkPair {
  Pose6 pose;         // settled plate pose
  JointVector joints; // command that produced it
  Split split = Split::Train;
};

struct IkDataset {
  std::vector<IkPair> pairs;
  std::size_t excluded_buckled = 0;
  std::size_t from_scan = 0;
  std::size_t from_random = 0;

  std::size_t count(Split s) const;
  /// Network inputs (x y z in m, roll pitch yaw in deg) as columns.
  Eigen::MatrixXd inputs(Split s) const;
  /// Joint angles in degrees as columns.
  Eigen::MatrixXd targets(Split s) const;
};

struct DatasetOptions {
  std::size_t n_random = 5904;
  double test_fraction = 0.1;
  double settle_time = 3.0;
  std::uint64_t seed = 0;
};

/// Scan pairs plus n_random uniformly drawn joint vectors settled through
/// the plant from neutral. Buckled samples are dropped and counted.
IkDataset build_dataset(Plant& plant, const std::vector<WorkspaceSample>& scan, const DatasetOptions& opts);

/// Settles `joints` from the neutral rest state and returns the pose.
Pose6 settle_from_neutral(Plant& plant, const JointVector& joints, double settle_time = 3.0);

Eigen::Matrix<double, 6, 1> pose_features(const Pose6& p);

inline std::vector<int> default_ik_layers() { return {6, 128, 128, 128, 6}; }

/// Trains on TRAIN; TEST is the validation set.
TrainResult train_ik(const IkDataset& data, const TrainOptions& opts, const std::vector<int>& layers = default_ik_layers());

struct IkPrediction {
  JointVector joints;          // clamped, with flags
  bool out_of_distribution = false;
};
IkPrediction predict(const Mlp& model, const Pose6& pose, const PlatformGeometry& g);

/// Rigid closed-form baseline.
JointVector rigid_ik(const Pose6& pose, const PlatformGeometry& g);

struct AxisErrors {
  std::array<double, 6> mean_abs{};  // m for x y z, deg for roll pitch yaw
  double translation = 0.0;          // mean Euclidean error, m
  double rotation = 0.0;             // mean geodesic error, deg
};

struct IkErrorReport {
  AxisErrors rigid;
  AxisErrors learned;
  std::array<double, 6> improvement{};  // 1 - learned / rigid
  double translation_improvement = 0.0;
  double rotation_improvement = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // infeasible under either model
  std::size_t out_of_distribution = 0;
};

/// Target poses reached by settling uniformly random joint vectors.
std::vector<Pose6> sample_test_poses(Plant& plant, std::size_t n, std::uint64_t seed, double settle_time = 3.0);

IkErrorReport evaluate_ik(const Mlp& model, Plant& plant, const std::vector<Pose6>& targets,
                          double settle_time = 3.0);

}  // namespace soft_stewart
