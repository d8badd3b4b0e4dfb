#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace soft_stewart {

/// Per-feature z-score statistics. Features with zero spread get unit scale.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Columns are samples.
  static Normalizer fit(const Eigen::MatrixXd& data);
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& data) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& data) const;
};

/// Dense network with ReLU on every hidden layer and a linear output.
/// Operates on normalized data; Mlp::predict applies the normalizers.
class Mlp {
 public:
  Mlp() = default;
  /// He-initialized weights, zero biases.
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t parameter_count() const;

  /// Columns are samples, in normalized units.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  /// Raw units in and out.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

  /// Mean squared error over every output entry. When `grad` is non-null it
  /// receives dLoss/dParams in the flat parameter order.
  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::VectorXd* grad = nullptr) const;

  /// Flat parameter vector: per layer, weights row-major then biases.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);

  Normalizer input_norm;
  Normalizer output_norm;
  /// Raw-unit bounds of the training inputs.
  Eigen::VectorXd input_min;
  Eigen::VectorXd input_max;

  std::string to_json() const;
  static Mlp from_json(const std::string& text);
  static constexpr int kFormatVersion = 1;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Eigen::VectorXd> biases_;
};

struct TrainOptions {
  int epochs = 500;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Epochs without validation improvement before the rate is halved.
  int plateau_patience = 10;
  double decay = 0.5;
  double min_learning_rate = 1e-6;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Mlp model;  // weights of the best validation epoch
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = 0;  // 1-based; loss vectors are indexed best_epoch - 1
  double final_learning_rate = 0.0;
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch, double learning_rate);
  int epoch;
  double learning_rate;
};

/// Adam on mini-batches of normalized data. Normalization statistics come
/// from the training inputs and targets only. With an empty validation set
/// the training loss selects the best epoch.
TrainResult train_mlp(const std::vector<int>& layer_sizes, const Eigen::MatrixXd& train_x,
                      const Eigen::MatrixXd& train_y, const Eigen::MatrixXd& val_x, const Eigen::MatrixXd& val_y,
                      const TrainOptions& opts);

}  // namespace soft_stewart
