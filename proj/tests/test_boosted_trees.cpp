#include "doctest.h"

#include "dnnens/boosted_trees.hpp"
#include "dnnens/errors.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace dnnens;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Three classes split by the sign of two noisy linear scores.
Problem three_class(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Problem p;
  p.x.resize(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < 4; ++c) p.x(r, c) = normal(rng);
    const double s = p.x(r, 0) + 0.5 * p.x(r, 1) + 0.3 * normal(rng);
    p.y.push_back(s < -0.4 ? 0 : (s < 0.4 ? 1 : 2));
  }
  return p;
}

double walk(const RegressionTree& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  std::size_t node = 0;
  for (;;) {
    const TreeNode& n = tree.nodes.at(node);
    if (n.feature < 0) return n.weight;
    node = static_cast<std::size_t>(x(row, n.feature) < n.threshold ? n.left : n.right);
  }
}

// Margin accumulation over every stored tree followed by a softmax.
Eigen::MatrixXd oracle_proba(const BoostedModel& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(m.n_classes));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> margin(m.n_classes, 0.0);
    for (const auto& round : m.rounds)
      for (std::size_t c = 0; c < m.n_classes; ++c)
        margin[c] += m.config.learning_rate * walk(round[c], x, r);
    double mx = margin[0];
    for (double v : margin) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : margin) z += std::exp(v - mx);
    for (std::size_t c = 0; c < m.n_classes; ++c)
      out(r, static_cast<Eigen::Index>(c)) = std::exp(margin[c] - mx) / z;
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
  double hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  return hits / static_cast<double>(y.size());
}

}  // namespace

TEST_SUITE("boosted_trees") {

TEST_CASE("leaf weight formula") {
  CHECK(leaf_weight(2.0, 1.0, 1.0) == -1.0);
  CHECK(leaf_weight(-3.0, 2.0, 1.0) == 1.0);
}

TEST_CASE("configuration checks") {
  BoostConfig cfg;
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.rounds = 1;
  cfg.max_depth = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_depth = 1;
  cfg.l2_lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(fit_boosted(x, std::vector<int>{1, 1, 1}, 2, BoostConfig{}), ConfigError);
  CHECK_THROWS_AS(fit_boosted(x.topRows(1), std::vector<int>{0}, 2, BoostConfig{}), ConfigError);
}

TEST_CASE("xor is fitted exactly at depth 2") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y{0, 1, 1, 0};
  BoostConfig cfg;
  cfg.rounds = 20;
  cfg.max_depth = 2;
  // Each leaf of the xor tree holds a single point with hessian <= 0.25.
  cfg.min_child_weight = 0.0;
  const BoostedModel m = fit_boosted(x, y, 2, cfg);
  CHECK(accuracy(predict_labels(m, x), y) == 1.0);
}

TEST_CASE("zero margins give uniform probabilities") {
  BoostedModel m;
  m.n_features = 2;
  m.n_classes = 4;
  const Eigen::MatrixXd p = predict_proba(m, Eigen::MatrixXd::Random(3, 2));
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("a depth-1 model is constant on each side of its threshold") {
  Eigen::MatrixXd x(40, 1);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = i;
    y.push_back(i < 20 ? 0 : 1);
  }
  BoostConfig cfg;
  cfg.rounds = 1;
  cfg.max_depth = 1;
  const BoostedModel m = fit_boosted(x, y, 2, cfg);
  const TreeNode& root = m.rounds.at(0).at(0).nodes.at(0);
  REQUIRE_FALSE(root.is_leaf());
  CHECK(root.threshold > 19.0);
  CHECK(root.threshold <= 20.0);
  const Eigen::MatrixXd p = predict_proba(m, x);
  for (int i = 0; i < 40; ++i) {
    const int anchor = i < 20 ? 0 : 39;
    CHECK(p.row(i) == p.row(anchor));
  }
  CHECK(p(0, 0) > 0.5);
  CHECK(p(39, 1) > 0.5);
}

TEST_CASE("training loss never increases and trees respect the depth limit") {
  const Problem p = three_class(300, 4);
  for (std::size_t depth : {1u, 2u, 3u, 5u}) {
    BoostConfig cfg;
    cfg.rounds = 30;
    cfg.max_depth = depth;
    const BoostedModel m = fit_boosted(p.x, p.y, 3, cfg);
    REQUIRE(m.rounds.size() == 30);
    REQUIRE(m.train_loss.size() == 31);
    CHECK(m.train_loss.front() == doctest::Approx(std::log(3.0)));
    for (std::size_t r = 1; r < m.train_loss.size(); ++r)
      CHECK(m.train_loss[r] <= m.train_loss[r - 1] + 1e-9);
    for (const auto& round : m.rounds) {
      REQUIRE(round.size() == 3);
      for (const auto& tree : round) CHECK(tree.depth() <= depth);
    }
  }
}

TEST_CASE("prediction matches a direct walk of the stored trees") {
  const Problem train = three_class(200, 1);
  const Problem probe = three_class(50, 2);
  const BoostedModel m = fit_boosted(train.x, train.y, 3, BoostConfig{});
  const Eigen::MatrixXd got = predict_proba(m, probe.x);
  CHECK((got - oracle_proba(m, probe.x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(accuracy(predict_labels(m, train.x), train.y) > 0.9);
  CHECK_THROWS_AS(predict_proba(m, Eigen::MatrixXd::Zero(2, 3)), ContractError);
}

TEST_CASE("fitting is deterministic") {
  const Problem p = three_class(120, 7);
  const BoostedModel a = fit_boosted(p.x, p.y, 3, BoostConfig{});
  const BoostedModel b = fit_boosted(p.x, p.y, 3, BoostConfig{});
  CHECK(predict_proba(a, p.x) == predict_proba(b, p.x));
}

TEST_CASE("model files") {
  test::TempDir dir("gbt");
  const Problem p = three_class(150, 3);
  const BoostedModel m = fit_boosted(p.x, p.y, 3, BoostConfig{});
  save_boosted(m, dir / "m.gbt");
  const BoostedModel back = load_boosted(dir / "m.gbt");
  CHECK(back.n_classes == 3);
  CHECK(back.n_features == 4);
  CHECK(back.rounds.size() == m.rounds.size());
  CHECK(back.train_loss == m.train_loss);
  CHECK(predict_proba(back, p.x) == predict_proba(m, p.x));

  std::string bytes = test::read_file(dir / "m.gbt");
  bytes[3] ^= 0x20;
  test::write_file(dir / "bad.gbt", bytes);
  CHECK_THROWS_AS(load_boosted(dir / "bad.gbt"), FormatError);
  test::write_file(dir / "short.gbt", test::read_file(dir / "m.gbt").substr(0, 40));
  CHECK_THROWS_AS(load_boosted(dir / "short.gbt"), FormatError);
}

}  // TEST_SUITE
