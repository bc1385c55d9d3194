#pragma once

#include "dnnens/errors.hpp"
#include "dnnens/seed.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace dnnens {

enum class Activation { relu };

struct MlpConfig {
  // [n_features, hidden..., n_classes]
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::relu;
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;

  static MlpConfig for_data(std::size_t n_features, std::size_t n_classes,
                            std::vector<std::size_t> hidden = {1200, 800});
};

struct TrainingTrace {
  double initial_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> epoch_loss;  // mean loss over each epoch's batches

  double final_loss() const {
    return epoch_loss.empty() ? initial_loss : epoch_loss.back();
  }
};

/// Fully connected network: rectifier hidden layers, softmax output.
/// Layer l maps activations of width layer_sizes[l] to layer_sizes[l+1] with
/// weights[l] of shape (out x in).
template <typename Scalar>
struct BasicMlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MlpConfig config;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  TrainingTrace trace;

  std::size_t n_layers() const noexcept { return weights.size(); }
  Eigen::Index n_inputs() const { return weights.front().cols(); }
  Eigen::Index n_classes() const { return weights.back().rows(); }
};

template <typename Scalar>
struct BasicGradients {
  std::vector<typename BasicMlp<Scalar>::Matrix> weights;
  std::vector<typename BasicMlp<Scalar>::Vector> biases;
};

using MlpModel = BasicMlp<double>;
using MlpGradients = BasicGradients<double>;
using ProbabilityVector = Eigen::VectorXd;

inline constexpr double kLogClamp = 1e-12;

// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::DenseBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

// Row-wise normalized exponential with max subtraction.
template <typename Derived>
void softmax_rows(Eigen::MatrixBase<Derived>& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

template <typename Scalar>
BasicMlp<Scalar> init_mlp(const MlpConfig& config) {
  config.validate();
  BasicMlp<Scalar> model;
  model.config = config;
  std::mt19937_64 rng(derive_seed(config.seed, "init"));
  for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(config.layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(config.layer_sizes[l + 1]);
    // He-uniform: variance 2 / fan_in.
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    typename BasicMlp<Scalar>::Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = static_cast<Scalar>(dist(rng));
    model.weights.push_back(std::move(w));
    model.biases.push_back(BasicMlp<Scalar>::Vector::Zero(fan_out));
  }
  return model;
}

namespace detail {

template <typename Scalar>
void check_input_width(const BasicMlp<Scalar>& model, Eigen::Index cols) {
  if (model.weights.empty()) throw ContractError("mlp: model has no layers");
  if (cols != model.n_inputs())
    throw ContractError("mlp: input has " + std::to_string(cols) +
                        " features, model expects " + std::to_string(model.n_inputs()));
}

// Pre-activations and activations of every layer for a batch (rows = samples).
// activations[0] is the input; activations.back() holds probabilities.
template <typename Scalar>
struct ForwardCache {
  std::vector<typename BasicMlp<Scalar>::Matrix> pre;
  std::vector<typename BasicMlp<Scalar>::Matrix> activations;
};

template <typename Scalar>
void forward_cached(const BasicMlp<Scalar>& model,
                    const typename BasicMlp<Scalar>::Matrix& inputs,
                    ForwardCache<Scalar>& cache) {
  const std::size_t layers = model.n_layers();
  cache.pre.resize(layers);
  cache.activations.resize(layers + 1);
  cache.activations[0] = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    auto& z = cache.pre[l];
    z.noalias() = cache.activations[l] * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    auto& a = cache.activations[l + 1];
    if (l + 1 < layers) {
      a = z.cwiseMax(Scalar(0));
    } else {
      a = z;
      softmax_rows(a);
    }
  }
}

template <typename Scalar>
Scalar mean_cross_entropy(const typename BasicMlp<Scalar>::Matrix& probs,
                          std::span<const int> labels) {
  Scalar total(0);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const Scalar p = probs(r, labels[static_cast<std::size_t>(r)]);
    total -= std::log(std::max(p, static_cast<Scalar>(kLogClamp)));
  }
  return total / static_cast<Scalar>(probs.rows());
}

// Backpropagation of the mean cross-entropy through a populated cache.
template <typename Scalar>
void backward(const BasicMlp<Scalar>& model, const ForwardCache<Scalar>& cache,
              std::span<const int> labels, BasicGradients<Scalar>& grads) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  const std::size_t layers = model.n_layers();
  const auto batch = static_cast<Scalar>(cache.activations[0].rows());
  grads.weights.resize(layers);
  grads.biases.resize(layers);

  Matrix delta = cache.activations.back();
  for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= Scalar(1);
  delta /= batch;

  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l].noalias() = delta.transpose() * cache.activations[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix upstream = delta * model.weights[l];
    delta = (cache.pre[l - 1].array() > Scalar(0)).select(upstream, Scalar(0));
  }
}

template <typename Scalar, typename Derived>
typename BasicMlp<Scalar>::Matrix to_scalar(const Eigen::MatrixBase<Derived>& x) {
  return x.template cast<Scalar>();
}

}  // namespace detail

/// Probability rows (samples x classes) for a batch of feature rows.
template <typename Scalar, typename Derived>
typename BasicMlp<Scalar>::Matrix predict_proba(const BasicMlp<Scalar>& model,
                                                const Eigen::MatrixBase<Derived>& features) {
  detail::check_input_width(model, features.cols());
  detail::ForwardCache<Scalar> cache;
  detail::forward_cached(model, detail::to_scalar<Scalar>(features), cache);
  return std::move(cache.activations.back());
}

template <typename Scalar, typename Derived>
typename BasicMlp<Scalar>::Vector forward(const BasicMlp<Scalar>& model,
                                          const Eigen::MatrixBase<Derived>& sample) {
  if (sample.cols() != 1 && sample.rows() != 1)
    throw ContractError("mlp: forward expects a single feature vector");
  typename BasicMlp<Scalar>::Matrix row = detail::to_scalar<Scalar>(sample);
  if (row.cols() == 1) row.transposeInPlace();
  return predict_proba(model, row).row(0).transpose();
}

// Mean cross-entropy of the true-class probability, clamped at kLogClamp.
template <typename Scalar, typename Derived>
Scalar loss(const BasicMlp<Scalar>& model, const Eigen::MatrixBase<Derived>& features,
            std::span<const int> labels) {
  if (labels.empty()) throw ContractError("mlp: empty batch");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ContractError("mlp: feature rows and labels differ in length");
  return detail::mean_cross_entropy<Scalar>(predict_proba(model, features), labels);
}

template <typename Scalar, typename Derived>
BasicGradients<Scalar> gradients(const BasicMlp<Scalar>& model,
                                 const Eigen::MatrixBase<Derived>& features,
                                 std::span<const int> labels) {
  if (labels.empty()) throw ContractError("mlp: empty batch");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ContractError("mlp: feature rows and labels differ in length");
  detail::check_input_width(model, features.cols());
  detail::ForwardCache<Scalar> cache;
  detail::forward_cached(model, detail::to_scalar<Scalar>(features), cache);
  BasicGradients<Scalar> grads;
  detail::backward(model, cache, labels, grads);
  return grads;
}

/// Shuffled mini-batch gradient descent with momentum over `rows` of the
/// given features/labels (rows may repeat). Records the loss over `rows`
/// before training and the mean batch loss of each epoch.
///
/// Throws TrainingDivergence on a non-finite batch loss.
template <typename Scalar>
void train(BasicMlp<Scalar>& model, const Eigen::MatrixXd& features,
           std::span<const int> labels, std::span<const std::size_t> rows) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  using Vector = typename BasicMlp<Scalar>::Vector;
  const MlpConfig& cfg = model.config;
  cfg.validate();
  detail::check_input_width(model, features.cols());
  if (rows.empty()) throw ContractError("mlp: empty training set");
  for (std::size_t r : rows)
    if (r >= labels.size() || static_cast<Eigen::Index>(r) >= features.rows())
      throw ContractError("mlp: training row index out of range");

  auto gather = [&](std::span<const std::size_t> idx, Matrix& x, std::vector<int>& y) {
    x.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) =
          features.row(static_cast<Eigen::Index>(idx[i])).template cast<Scalar>();
      y[i] = labels[idx[i]];
    }
  };

  {
    Matrix x;
    std::vector<int> y;
    gather(rows, x, y);
    model.trace.initial_loss = static_cast<double>(loss(model, x, y));
  }
  model.trace.epoch_loss.clear();

  std::vector<Matrix> vel_w;
  std::vector<Vector> vel_b;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    vel_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    vel_b.push_back(Vector::Zero(model.biases[l].size()));
  }

  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::mt19937_64 rng(derive_seed(cfg.seed, "shuffle"));
  detail::ForwardCache<Scalar> cache;
  BasicGradients<Scalar> grads;
  Matrix xb;
  std::vector<int> yb;
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto mu = static_cast<Scalar>(cfg.momentum);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      gather(std::span(order).subspan(start, len), xb, yb);
      detail::forward_cached(model, xb, cache);
      const double batch_loss =
          static_cast<double>(detail::mean_cross_entropy<Scalar>(cache.activations.back(), yb));
      if (!std::isfinite(batch_loss)) throw TrainingDivergence(epoch, batch_no);
      epoch_total += batch_loss * static_cast<double>(len);
      detail::backward(model, cache, yb, grads);
      for (std::size_t l = 0; l < model.n_layers(); ++l) {
        vel_w[l] = mu * vel_w[l] - lr * grads.weights[l];
        vel_b[l] = mu * vel_b[l] - lr * grads.biases[l];
        model.weights[l] += vel_w[l];
        model.biases[l] += vel_b[l];
      }
    }
    model.trace.epoch_loss.push_back(epoch_total / static_cast<double>(order.size()));
  }
}

template <typename Scalar>
void train(BasicMlp<Scalar>& model, const Eigen::MatrixXd& features,
           std::span<const int> labels) {
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  train(model, features, labels, all);
}

// Per-row argmax of a probability matrix, lowest index on ties.
template <typename Derived>
std::vector<int> predict_labels(const Eigen::MatrixBase<Derived>& probabilities) {
  std::vector<int> out(static_cast<std::size_t>(probabilities.rows()));
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r)
    out[static_cast<std::size_t>(r)] = static_cast<int>(argmax(probabilities.row(r)));
  return out;
}

/// Binary model file: magic "DNNEMLP\0", u32 version, config block, loss
/// trace, then per layer (rows, cols, row-major weights, bias). Little-endian.
void save_mlp(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path);

}  // namespace dnnens
