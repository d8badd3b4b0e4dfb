#include "soft_stewart/learned_ik.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

namespace soft_stewart {

std::size_t IkDataset::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [s](const IkPair& p) { return p.split == s; }));
}

Eigen::Matrix<double, 6, 1> pose_features(const Pose6& p) {
  Eigen::Matrix<double, 6, 1> f;
  f << p.x, p.y, p.z, rad2deg(p.roll), rad2deg(p.pitch), rad2deg(p.yaw);
  return f;
}

Eigen::MatrixXd IkDataset::inputs(Split s) const {
  Eigen::MatrixXd m(6, static_cast<Eigen::Index>(count(s)));
  Eigen::Index c = 0;
  for (const auto& p : pairs)
    if (p.split == s) m.col(c++) = pose_features(p.pose);
  return m;
}

Eigen::MatrixXd IkDataset::targets(Split s) const {
  Eigen::MatrixXd m(6, static_cast<Eigen::Index>(count(s)));
  Eigen::Index c = 0;
  for (const auto& p : pairs) {
    if (p.split != s) continue;
    for (std::size_t n = 0; n < kStrutCount; ++n) m(static_cast<Eigen::Index>(n), c) = p.joints.deg[n];
    ++c;
  }
  return m;
}

Pose6 settle_from_neutral(Plant& plant, const JointVector& joints, double settle_time) {
  plant.reset(JointVector::uniform(plant.config().geometry.joint_min_deg));
  plant.settle(joints, settle_time);
  return plant.state().pose;
}

namespace {

bool sample_buckled(const Plant& plant) {
  return plant.state().any_buckled() || plant.state().feasibility.load_class == LoadClass::Infeasible;
}

JointVector random_joints(const PlatformGeometry& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(g.joint_min_deg, g.joint_max_deg);
  JointVector q;
  for (auto& d : q.deg) d = u(rng);
  return q;
}

double geodesic_deg(const Pose6& a, const Pose6& b) {
  const Eigen::Matrix3d r = rotation_matrix(a.roll, a.pitch, a.yaw).transpose() * rotation_matrix(b.roll, b.pitch, b.yaw);
  return rad2deg(Eigen::AngleAxisd(r).angle());
}

}  // namespace

IkDataset build_dataset(Plant& plant, const std::vector<WorkspaceSample>& scan, const DatasetOptions& opts) {
  if (!(opts.test_fraction >= 0.0 && opts.test_fraction < 1.0)) throw std::invalid_argument("dataset: bad test fraction");
  IkDataset d;
  for (const auto& s : scan) {
    if (s.buckled) {
      ++d.excluded_buckled;
      continue;
    }
    d.pairs.push_back({s.pose, s.joints, Split::Train});
    ++d.from_scan;
  }
  std::mt19937_64 rng(opts.seed);
  for (std::size_t i = 0; i < opts.n_random; ++i) {
    const JointVector q = random_joints(plant.config().geometry, rng);
    const Pose6 pose = settle_from_neutral(plant, q, opts.settle_time);
    if (sample_buckled(plant)) {
      ++d.excluded_buckled;
      continue;
    }
    d.pairs.push_back({pose, q, Split::Train});
    ++d.from_random;
  }
  plant.reset(JointVector::uniform(plant.config().geometry.joint_min_deg));

  std::vector<std::size_t> order(d.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::lround(opts.test_fraction * static_cast<double>(d.pairs.size())));
  for (std::size_t i = 0; i < n_test; ++i) d.pairs[order[i]].split = Split::Test;
  return d;
}

TrainResult train_ik(const IkDataset& data, const TrainOptions& opts, const std::vector<int>& layers) {
  if (data.count(Split::Train) == 0) throw std::invalid_argument("train: empty TRAIN split");
  return train_mlp(layers, data.inputs(Split::Train), data.targets(Split::Train), data.inputs(Split::Test),
                   data.targets(Split::Test), opts);
}

IkPrediction predict(const Mlp& model, const Pose6& pose, const PlatformGeometry& g) {
  const Eigen::VectorXd f = pose_features(pose);
  IkPrediction out;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] < model.input_min[i] || f[i] > model.input_max[i]) out.out_of_distribution = true;
  const Eigen::VectorXd q = model.predict(f);
  for (std::size_t n = 0; n < kStrutCount; ++n) {
    const double raw = q[static_cast<Eigen::Index>(n)];
    out.joints.deg[n] = std::clamp(raw, g.joint_min_deg, g.joint_max_deg);
    out.joints.saturated[n] = out.joints.deg[n] != raw;
  }
  return out;
}

JointVector rigid_ik(const Pose6& pose, const PlatformGeometry& g) {
  return lengths_to_joints(inverse_kinematics(pose, g), g);
}

std::vector<Pose6> sample_test_poses(Plant& plant, std::size_t n, std::uint64_t seed, double settle_time) {
  std::mt19937_64 rng(seed);
  std::vector<Pose6> out;
  out.reserve(n);
  while (out.size() < n) {
    const Pose6 p = settle_from_neutral(plant, random_joints(plant.config().geometry, rng), settle_time);
    if (!sample_buckled(plant)) out.push_back(p);
  }
  plant.reset(JointVector::uniform(plant.config().geometry.joint_min_deg));
  return out;
}

IkErrorReport evaluate_ik(const Mlp& model, Plant& plant, const std::vector<Pose6>& targets, double settle_time) {
  const PlatformGeometry& g = plant.config().geometry;
  IkErrorReport r;
  auto accumulate = [](AxisErrors& e, const Pose6& got, const Pose6& want) {
    for (std::size_t i = 0; i < 6; ++i) {
      const double d = std::abs(got[i] - want[i]);
      e.mean_abs[i] += i < 3 ? d : rad2deg(std::abs(wrap_angle(got[i] - want[i])));
    }
    e.translation += (got.translation() - want.translation()).norm();
    e.rotation += geodesic_deg(got, want);
  };
  for (const Pose6& target : targets) {
    const JointVector rigid = rigid_ik(target, g);
    const IkPrediction learned = predict(model, target, g);
    if (learned.out_of_distribution) ++r.out_of_distribution;
    if (rigid.any_saturated() || learned.joints.any_saturated()) {
      ++r.excluded;
      continue;
    }
    const Pose6 rigid_pose = settle_from_neutral(plant, rigid, settle_time);
    const bool rigid_bad = sample_buckled(plant);
    const Pose6 learned_pose = settle_from_neutral(plant, learned.joints, settle_time);
    if (rigid_bad || sample_buckled(plant)) {
      ++r.excluded;
      continue;
    }
    accumulate(r.rigid, rigid_pose, target);
    accumulate(r.learned, learned_pose, target);
    ++r.evaluated;
  }
  plant.reset(JointVector::uniform(g.joint_min_deg));
  if (r.evaluated == 0) return r;

  const double n = static_cast<double>(r.evaluated);
  for (AxisErrors* e : {&r.rigid, &r.learned}) {
    for (double& v : e->mean_abs) v /= n;
    e->translation /= n;
    e->rotation /= n;
  }
  auto improve = [](double learned, double rigid) { return rigid > 0.0 ? 1.0 - learned / rigid : 0.0; };
  for (std::size_t i = 0; i < 6; ++i) r.improvement[i] = improve(r.learned.mean_abs[i], r.rigid.mean_abs[i]);
  r.translation_improvement = improve(r.learned.translation, r.rigid.translation);
  r.rotation_improvement = improve(r.learned.rotation, r.rigid.rotation);
  return r;
}

}  // namespace soft_stewart
