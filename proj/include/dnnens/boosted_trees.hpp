#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dnnens {

struct BoostConfig {
  std::size_t rounds = 50;
  std::size_t max_depth = 3;
  double learning_rate = 0.3;  // shrinkage
  double l2_lambda = 1.0;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] < threshold goes left
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf value before shrinkage

  bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double evaluate(const Row& x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x(n.feature) < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].weight;
  }

  // Edges on the longest root-to-leaf path.
  std::size_t depth() const;
};

/// Softmax gradient boosting: each round fits one regression tree per class
/// to the gradients/hessians of the multiclass cross-entropy.
struct BoostedModel {
  BoostConfig config;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<std::vector<RegressionTree>> rounds;  // [round][class]
  // Training cross-entropy before round 1 and after every round.
  std::vector<double> train_loss;
};

/// Second-order tree boosting with exact greedy splits. A split is accepted
/// when its regularized gain is non-negative and both children carry a
/// hessian sum of at least min_child_weight; leaf weight is -G / (H + lambda).
///
/// Throws ConfigError for fewer than 2 samples or a single distinct label.
BoostedModel fit_boosted(const Eigen::MatrixXd& features, std::span<const int> labels,
                         std::size_t n_classes, const BoostConfig& config);

Eigen::MatrixXd boosted_margins(const BoostedModel& model, const Eigen::MatrixXd& features);
Eigen::MatrixXd predict_proba(const BoostedModel& model, const Eigen::MatrixXd& features);
std::vector<int> predict_labels(const BoostedModel& model, const Eigen::MatrixXd& features);

// -G / (H + lambda)
inline double leaf_weight(double grad_sum, double hess_sum, double lambda) {
  return -grad_sum / (hess_sum + lambda);
}

void save_boosted(const BoostedModel& model, const std::filesystem::path& path);
BoostedModel load_boosted(const std::filesystem::path& path);

}  // namespace dnnens
