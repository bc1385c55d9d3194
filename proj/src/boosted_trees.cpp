#include "dnnens/boosted_trees.hpp"

#include "binary_io.hpp"
#include "dnnens/errors.hpp"
#include "dnnens/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dnnens {

namespace {

constexpr std::string_view kBoostMagic{"DNNEGBT\0", 8};
constexpr std::uint32_t kBoostVersion = 1;
constexpr double kMinHessian = 1e-16;

double cross_entropy(const Eigen::MatrixXd& margins, std::span<const int> labels) {
  Eigen::MatrixXd p = margins;
  softmax_rows(p);
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    total -= std::log(std::max(p(r, labels[static_cast<std::size_t>(r)]), kLogClamp));
  return total / static_cast<double>(p.rows());
}

// Exact greedy growth of one tree over presorted feature columns.
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<std::vector<std::size_t>>& sorted,
              const Eigen::VectorXd& grad, const Eigen::VectorXd& hess, const BoostConfig& cfg)
      : x_(x), sorted_(sorted), grad_(grad), hess_(hess), cfg_(cfg),
        member_(static_cast<std::size_t>(x.rows()), -1) {}

  RegressionTree build() {
    std::vector<std::size_t> all(static_cast<std::size_t>(x_.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    tree_.nodes.clear();
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
  };

  int grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += grad_(static_cast<Eigen::Index>(r));
      h += hess_(static_cast<Eigen::Index>(r));
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.back().weight = leaf_weight(g, h, cfg_.l2_lambda);
    if (depth >= cfg_.max_depth || rows.size() < 2) return id;

    const Split best = find_split(rows, g, h, id);
    if (best.feature < 0 || best.gain < 0.0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows)
      (x_(static_cast<Eigen::Index>(r), best.feature) < best.threshold ? left : right).push_back(r);
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows, double g_total, double h_total,
                   int node_id) {
    for (std::size_t r : rows) member_[r] = node_id;
    const double lambda = cfg_.l2_lambda;
    const double parent = g_total * g_total / (h_total + lambda);
    Split best;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      const auto col = static_cast<Eigen::Index>(f);
      double gl = 0.0, hl = 0.0;
      std::size_t seen = 0;
      std::size_t prev = 0;
      for (std::size_t r : sorted_[f]) {
        if (member_[r] != node_id) continue;
        if (seen > 0) {
          const double a = x_(static_cast<Eigen::Index>(prev), col);
          const double b = x_(static_cast<Eigen::Index>(r), col);
          if (b > a) {
            const double gr = g_total - gl;
            const double hr = h_total - hl;
            if (hl >= cfg_.min_child_weight && hr >= cfg_.min_child_weight) {
              const double gain =
                  0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
              if (gain > best.gain) {
                double mid = a + (b - a) / 2.0;
                if (!(mid > a)) mid = b;
                best = {gain, static_cast<int>(f), mid};
              }
            }
          }
        }
        gl += grad_(static_cast<Eigen::Index>(r));
        hl += hess_(static_cast<Eigen::Index>(r));
        prev = r;
        ++seen;
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const Eigen::VectorXd& grad_;
  const Eigen::VectorXd& hess_;
  const BoostConfig& cfg_;
  std::vector<int> member_;
  RegressionTree tree_;
};

void check_tree(const RegressionTree& tree) {
  if (tree.nodes.empty()) throw FormatError("boosted model: empty tree");
  const auto n = static_cast<int>(tree.nodes.size());
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
    if (!std::isfinite(node.weight)) throw FormatError("boosted model: non-finite leaf");
    if (node.is_leaf()) continue;
    if (node.left <= i || node.right <= i || node.left >= n || node.right >= n)
      throw FormatError("boosted model: bad child index");
  }
}

}  // namespace

void BoostConfig::validate() const {
  if (rounds < 1) throw ConfigError("boost: rounds must be >= 1");
  if (max_depth < 1) throw ConfigError("boost: max_depth must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("boost: learning_rate must be positive");
  if (!(l2_lambda >= 0.0)) throw ConfigError("boost: l2_lambda must be non-negative");
  if (!(min_child_weight >= 0.0))
    throw ConfigError("boost: min_child_weight must be non-negative");
}

std::size_t RegressionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      deepest = std::max(deepest, d);
    } else {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return deepest;
}

BoostedModel fit_boosted(const Eigen::MatrixXd& features, std::span<const int> labels,
                         std::size_t n_classes, const BoostConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(features.rows());
  if (n != labels.size()) throw ContractError("boost: feature rows and labels differ");
  if (n < 2) throw ConfigError("boost: need at least two training samples");
  if (n_classes < 2) throw ConfigError("boost: need at least two classes");
  if (features.cols() < 1) throw ContractError("boost: no features");
  std::vector<bool> present(n_classes, false);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw ContractError("boost: label out of range");
    present[static_cast<std::size_t>(y)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    throw ConfigError("boost: training labels contain a single class");

  BoostedModel model;
  model.config = config;
  model.n_features = static_cast<std::size_t>(features.cols());
  model.n_classes = n_classes;

  std::vector<std::vector<std::size_t>> sorted(model.n_features);
  for (std::size_t f = 0; f < model.n_features; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return features(static_cast<Eigen::Index>(a), col) <
             features(static_cast<Eigen::Index>(b), col);
    });
  }

  const auto rows = static_cast<Eigen::Index>(n);
  const auto classes = static_cast<Eigen::Index>(n_classes);
  Eigen::MatrixXd margins = Eigen::MatrixXd::Zero(rows, classes);
  Eigen::VectorXd grad(rows), hess(rows);
  model.train_loss.push_back(cross_entropy(margins, labels));

  for (std::size_t round = 0; round < config.rounds; ++round) {
    Eigen::MatrixXd p = margins;
    softmax_rows(p);
    std::vector<RegressionTree> trees;
    for (Eigen::Index k = 0; k < classes; ++k) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double pk = p(r, k);
        grad(r) = pk - (labels[static_cast<std::size_t>(r)] == k ? 1.0 : 0.0);
        hess(r) = std::max(pk * (1.0 - pk), kMinHessian);
      }
      trees.push_back(TreeBuilder(features, sorted, grad, hess, config).build());
    }
    for (Eigen::Index k = 0; k < classes; ++k)
      for (Eigen::Index r = 0; r < rows; ++r)
        margins(r, k) += config.learning_rate *
                         trees[static_cast<std::size_t>(k)].evaluate(features.row(r));
    model.rounds.push_back(std::move(trees));
    model.train_loss.push_back(cross_entropy(margins, labels));
  }
  return model;
}

Eigen::MatrixXd boosted_margins(const BoostedModel& model, const Eigen::MatrixXd& features) {
  if (static_cast<std::size_t>(features.cols()) != model.n_features)
    throw ContractError("boost: input has " + std::to_string(features.cols()) +
                        " features, model expects " + std::to_string(model.n_features));
  Eigen::MatrixXd margins =
      Eigen::MatrixXd::Zero(features.rows(), static_cast<Eigen::Index>(model.n_classes));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    const auto x = features.row(r);
    for (const auto& trees : model.rounds)
      for (std::size_t k = 0; k < trees.size(); ++k)
        margins(r, static_cast<Eigen::Index>(k)) +=
            trees[k].evaluate(x) * model.config.learning_rate;
  }
  return margins;
}

Eigen::MatrixXd predict_proba(const BoostedModel& model, const Eigen::MatrixXd& features) {
  Eigen::MatrixXd p = boosted_margins(model, features);
  softmax_rows(p);
  return p;
}

std::vector<int> predict_labels(const BoostedModel& model, const Eigen::MatrixXd& features) {
  return predict_labels(predict_proba(model, features));
}

void save_boosted(const BoostedModel& model, const std::filesystem::path& path) {
  io::BinaryWriter out(path);
  out.magic(kBoostMagic);
  out.u32(kBoostVersion);
  const BoostConfig& c = model.config;
  out.u64(c.rounds);
  out.u64(c.max_depth);
  out.f64(c.learning_rate);
  out.f64(c.l2_lambda);
  out.f64(c.min_child_weight);
  out.u64(c.seed);
  out.u64(model.n_features);
  out.u64(model.n_classes);
  out.u64(model.train_loss.size());
  out.f64s(model.train_loss.data(), model.train_loss.size());
  out.u64(model.rounds.size());
  for (const auto& trees : model.rounds) {
    for (const auto& tree : trees) {
      out.u64(tree.nodes.size());
      for (const auto& node : tree.nodes) {
        out.i64(node.feature);
        out.f64(node.threshold);
        out.i64(node.left);
        out.i64(node.right);
        out.f64(node.weight);
      }
    }
  }
  out.finish();
}

BoostedModel load_boosted(const std::filesystem::path& path) {
  io::BinaryReader in(path);
  in.expect_magic(kBoostMagic, "boosted model");
  if (const auto version = in.u32(); version != kBoostVersion)
    throw FormatError("boosted model '" + path.string() + "' has unsupported version " +
                      std::to_string(version));
  BoostedModel model;
  BoostConfig& c = model.config;
  c.rounds = in.u64();
  c.max_depth = in.u64();
  c.learning_rate = in.f64();
  c.l2_lambda = in.f64();
  c.min_child_weight = in.f64();
  c.seed = in.u64();
  model.n_features = in.u64();
  model.n_classes = in.u64();
  if (model.n_classes < 2 || model.n_features < 1)
    throw FormatError("boosted model: bad dimensions");
  model.train_loss.resize(in.count(sizeof(double)));
  in.f64s(model.train_loss.data(), model.train_loss.size());
  const auto n_rounds = in.count(model.n_classes * sizeof(std::uint64_t));
  constexpr std::size_t kNodeBytes = 5 * 8;
  for (std::uint64_t round = 0; round < n_rounds; ++round) {
    std::vector<RegressionTree> trees(model.n_classes);
    for (auto& tree : trees) {
      tree.nodes.resize(in.count(kNodeBytes));
      for (auto& node : tree.nodes) {
        node.feature = static_cast<int>(in.i64());
        node.threshold = in.f64();
        node.left = static_cast<int>(in.i64());
        node.right = static_cast<int>(in.i64());
        node.weight = in.f64();
        if (node.feature >= static_cast<int>(model.n_features))
          throw FormatError("boosted model: split feature out of range");
      }
      check_tree(tree);
    }
    model.rounds.push_back(std::move(trees));
  }
  in.expect_end();
  return model;
}

}  // namespace dnnens
