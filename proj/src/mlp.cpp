#include "soft_stewart/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

namespace soft_stewart {

Normalizer Normalizer::fit(const Eigen::MatrixXd& data) {
  if (data.cols() == 0) throw std::invalid_argument("normalizer: empty data");
  Normalizer n;
  n.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - n.mean;
  n.scale = (centered.array().square().rowwise().sum() / static_cast<double>(data.cols())).sqrt();
  for (Eigen::Index i = 0; i < n.scale.size(); ++i)
    if (!(n.scale[i] > 1e-12)) n.scale[i] = 1.0;
  return n;
}

Eigen::MatrixXd Normalizer::normalize(const Eigen::MatrixXd& data) const {
  return (data.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Normalizer::denormalize(const Eigen::MatrixXd& data) const {
  return (data.array().colwise() * scale.array()).matrix().colwise() + mean;
}

Mlp::Mlp(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / sizes_[l]));
    Eigen::MatrixXd w(sizes_[l + 1], sizes_[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
  const int in = sizes_.front(), out = sizes_.back();
  input_norm = {Eigen::VectorXd::Zero(in), Eigen::VectorXd::Ones(in)};
  output_norm = {Eigen::VectorXd::Zero(out), Eigen::VectorXd::Ones(out)};
  input_min = Eigen::VectorXd::Constant(in, -std::numeric_limits<double>::infinity());
  input_max = Eigen::VectorXd::Constant(in, std::numeric_limits<double>::infinity());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::predict(const Eigen::MatrixXd& x) const {
  return output_norm.denormalize(forward(input_norm.normalize(x)));
}

double Mlp::loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::VectorXd* grad) const {
  const std::size_t layers = weights_.size();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (weights_[l] * acts.back()).colwise() + biases_[l];
    if (l + 1 < layers) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd diff = acts.back() - y;
  const double count = static_cast<double>(diff.size());
  const double value = diff.squaredNorm() / count;
  if (!grad) return value;

  grad->resize(static_cast<Eigen::Index>(parameter_count()));
  std::vector<Eigen::Index> offset(layers);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l] = at;
    at += weights_[l].size() + biases_[l].size();
  }
  Eigen::MatrixXd delta = (2.0 / count) * diff;
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd gw = delta * acts[l].transpose();
    const Eigen::Index rows = gw.rows(), cols = gw.cols();
    // Row-major flattening.
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(grad->data() + offset[l], rows,
                                                                                        cols) = gw;
    grad->segment(offset[l] + rows * cols, rows) = delta.rowwise().sum();
    if (l == 0) break;
    delta = (weights_[l].transpose() * delta).cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
  }
  return value;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::Index rows = weights_[l].rows(), cols = weights_[l].cols();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p.data() + at, rows, cols) =
        weights_[l];
    at += rows * cols;
    p.segment(at, rows) = biases_[l];
    at += rows;
  }
  return p;
}

void Mlp::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != static_cast<Eigen::Index>(parameter_count()))
    throw std::invalid_argument("mlp: parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::Index rows = weights_[l].rows(), cols = weights_[l].cols();
    weights_[l] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        p.data() + at, rows, cols);
    at += rows * cols;
    biases_[l] = p.segment(at, rows);
    at += rows;
  }
}

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string Mlp::to_json() const {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["layer_sizes"] = sizes_;
  j["activation"] = "relu";
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = weights_[l];
    layers.push_back({{"weights_row_major", std::vector<double>(w.data(), w.data() + w.size())},
                      {"biases", to_vec(biases_[l])}});
  }
  j["layers"] = std::move(layers);
  j["input_norm"] = {{"mean", to_vec(input_norm.mean)}, {"scale", to_vec(input_norm.scale)}};
  j["output_norm"] = {{"mean", to_vec(output_norm.mean)}, {"scale", to_vec(output_norm.scale)}};
  auto bound = [](const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isfinite(v[i]))
        a.push_back(v[i]);
      else
        a.push_back(nullptr);
    }
    return a;
  };
  j["input_min"] = bound(input_min);
  j["input_max"] = bound(input_max);
  // nlohmann writes the shortest round-trip form of each double.
  return j.dump(1);
}

Mlp Mlp::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("format_version").get<int>() != kFormatVersion) throw std::invalid_argument("mlp: unsupported format version");
  Mlp m(j.at("layer_sizes").get<std::vector<int>>(), 0);
  const auto& layers = j.at("layers");
  if (layers.size() != m.weights_.size()) throw std::invalid_argument("mlp: layer count mismatch");
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    const auto w = layers[l].at("weights_row_major").get<std::vector<double>>();
    const auto b = layers[l].at("biases").get<std::vector<double>>();
    const Eigen::Index rows = m.weights_[l].rows(), cols = m.weights_[l].cols();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
      throw std::invalid_argument("mlp: layer shape mismatch");
    m.weights_[l] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), rows, cols);
    m.biases_[l] = from_vec(b);
  }
  m.input_norm = {from_vec(j.at("input_norm").at("mean").get<std::vector<double>>()),
                  from_vec(j.at("input_norm").at("scale").get<std::vector<double>>())};
  m.output_norm = {from_vec(j.at("output_norm").at("mean").get<std::vector<double>>()),
                   from_vec(j.at("output_norm").at("scale").get<std::vector<double>>())};
  auto bound = [](const nlohmann::json& a, double missing) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].is_null() ? missing : a[i].get<double>();
    return v;
  };
  m.input_min = bound(j.at("input_min"), -std::numeric_limits<double>::infinity());
  m.input_max = bound(j.at("input_max"), std::numeric_limits<double>::infinity());
  return m;
}

TrainingDiverged::TrainingDiverged(int e, double lr)
    : std::runtime_error("training diverged at epoch " + std::to_string(e) + " with learning rate " + std::to_string(lr)),
      epoch(e),
      learning_rate(lr) {}

TrainResult train_mlp(const std::vector<int>& sizes, const Eigen::MatrixXd& train_x, const Eigen::MatrixXd& train_y,
                      const Eigen::MatrixXd& val_x, const Eigen::MatrixXd& val_y, const TrainOptions& opts) {
  if (train_x.cols() == 0 || train_x.cols() != train_y.cols()) throw std::invalid_argument("train: bad training set");
  if (val_x.cols() != val_y.cols()) throw std::invalid_argument("train: bad validation set");
  if (opts.epochs < 1 || opts.batch_size < 1 || !(opts.learning_rate > 0.0))
    throw std::invalid_argument("train: invalid options");

  Mlp model(sizes, opts.seed);
  if (train_x.rows() != sizes.front() || train_y.rows() != sizes.back())
    throw std::invalid_argument("train: data does not match the layer sizes");
  model.input_norm = Normalizer::fit(train_x);
  model.output_norm = Normalizer::fit(train_y);
  model.input_min = train_x.rowwise().minCoeff();
  model.input_max = train_x.rowwise().maxCoeff();

  const Eigen::MatrixXd x = model.input_norm.normalize(train_x);
  const Eigen::MatrixXd y = model.output_norm.normalize(train_y);
  const bool has_val = val_x.cols() > 0;
  const Eigen::MatrixXd vx = has_val ? model.input_norm.normalize(val_x) : x;
  const Eigen::MatrixXd vy = has_val ? model.output_norm.normalize(val_y) : y;

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  const Eigen::Index n = x.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd params = model.parameters();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd grad;
  long long t = 0;
  double lr = opts.learning_rate;

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = params;
  int since_best = 0;
  Eigen::MatrixXd bx(x.rows(), opts.batch_size), by(y.rows(), opts.batch_size);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += opts.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(opts.batch_size, n - start);
      bx.resize(x.rows(), b);
      by.resize(y.rows(), b);
      for (Eigen::Index k = 0; k < b; ++k) {
        bx.col(k) = x.col(order[static_cast<std::size_t>(start + k)]);
        by.col(k) = y.col(order[static_cast<std::size_t>(start + k)]);
      }
      model.loss(bx, by, &grad);
      ++t;
      m1 = opts.beta1 * m1 + (1.0 - opts.beta1) * grad;
      m2 = opts.beta2 * m2 + (1.0 - opts.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(t));
      params.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + opts.epsilon);
      model.set_parameters(params);
    }
    const double train_loss = model.loss(x, y);
    const double val_loss = has_val ? model.loss(vx, vy) : train_loss;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) throw TrainingDiverged(epoch, lr);
    result.train_loss.push_back(train_loss);
    result.validation_loss.push_back(val_loss);
    if (val_loss < best * (1.0 - 1e-4)) {
      best = val_loss;
      best_params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opts.plateau_patience) {
      lr = std::max(opts.min_learning_rate, lr * opts.decay);
      since_best = 0;
    }
  }
  model.set_parameters(best_params);
  result.model = std::move(model);
  result.final_learning_rate = lr;
  return result;
}

}  // namespace soft_stewart
