#include "dnnens/selfcheck.hpp"

#include "dnnens/boosted_trees.hpp"
#include "dnnens/fusion.hpp"
#include "dnnens/neural_net.hpp"
#include "dnnens/seed.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dnnens {

namespace {

// Every assignment of n votes over C classes as one sample each.
PredictionMatrix all_vote_patterns(std::size_t n, std::size_t classes,
                                   std::vector<std::vector<int>>& patterns) {
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= classes;
  patterns.assign(total, std::vector<int>(n));
  std::vector<Eigen::MatrixXd> probs(
      n, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(classes)));
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t code = s;
    for (std::size_t j = 0; j < n; ++j) {
      const int vote = static_cast<int>(code % classes);
      code /= classes;
      patterns[s][j] = vote;
      probs[j](static_cast<Eigen::Index>(s), vote) = 1.0;
    }
  }
  return PredictionMatrix(std::move(probs));
}

CheckResult check_voting(std::uint64_t) {
  std::size_t mismatches = 0, cases = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t classes = 1; classes <= 3; ++classes) {
      std::vector<std::vector<int>> patterns;
      const PredictionMatrix pm = all_vote_patterns(n, classes, patterns);
      const FusionOutcome plural = plurality_vote(pm);
      const FusionOutcome major = majority_vote(pm);
      for (std::size_t s = 0; s < patterns.size(); ++s, ++cases) {
        std::vector<std::size_t> count(classes, 0);
        for (int v : patterns[s]) ++count[static_cast<std::size_t>(v)];
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
          if (count[c] > count[best]) best = c;
        const int expected_majority = 2 * count[best] > n ? static_cast<int>(best) : kRejected;
        if (plural.decisions[s] != static_cast<int>(best)) ++mismatches;
        if (major.decisions[s] != expected_majority) ++mismatches;
      }
    }
  }
  std::ostringstream detail;
  detail << cases << " vote patterns, " << mismatches << " mismatches";
  return {"voting rules vs exhaustive counting", mismatches == 0, detail.str()};
}

CheckResult check_gradients(std::uint64_t seed) {
  MlpConfig cfg;
  cfg.layer_sizes = {4, 2, 3, 2};
  cfg.seed = seed;
  MlpModel model = init_mlp<double>(cfg);
  std::mt19937_64 rng(derive_seed(seed, "data"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& b : model.biases)
    for (auto& v : b) v = 0.1 * normal(rng);
  Eigen::MatrixXd x(6, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  const std::vector<int> y = {0, 1, 1, 0, 1, 0};

  const MlpGradients g = gradients(model, x, y);
  constexpr double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss(model, x, y);
    param = saved - h;
    const double down = loss(model, x, y);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    for (Eigen::Index i = 0; i < model.weights[l].size(); ++i)
      probe(model.weights[l](i), g.weights[l](i));
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i)
      probe(model.biases[l](i), g.biases[l](i));
  }
  std::ostringstream detail;
  detail << "max relative error " << worst;
  return {"analytic gradients vs central differences (4-2-3-2)", worst < 1e-4, detail.str()};
}

CheckResult check_variance_ratio(std::uint64_t seed) {
  constexpr int n = 7;
  constexpr int draws = 10000;
  std::mt19937_64 rng(derive_seed(seed, "variance"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd outputs(draws, n);
  for (Eigen::Index i = 0; i < outputs.size(); ++i) outputs(i) = normal(rng);
  const VarianceReport r = variance_report(outputs);
  const double expected = 1.0 / n;
  std::ostringstream detail;
  detail << "ratio " << r.ratio << " (1/n = " << expected << ")";
  return {"variance ratio of 7 independent learners",
          r.ratio >= 0.85 * expected && r.ratio <= 1.15 * expected, detail.str()};
}

CheckResult check_filter_degenerate_threshold(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "filter"));
  std::gamma_distribution<double> gamma(0.5, 1.0);
  auto random_pm = [&](Eigen::Index samples) {
    std::vector<Eigen::MatrixXd> probs;
    for (int j = 0; j < 7; ++j) {
      Eigen::MatrixXd m(samples, 3);
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = gamma(rng) + 1e-12;
      for (Eigen::Index r = 0; r < samples; ++r) m.row(r) /= m.row(r).sum();
      probs.push_back(std::move(m));
    }
    return PredictionMatrix(std::move(probs));
  };
  const PredictionMatrix train = random_pm(60);
  const PredictionMatrix test = random_pm(200);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  BoostConfig boost;
  boost.rounds = 5;
  const FilteredFusion f = filtered_fuse(train, labels, test, 1, boost);
  const bool same = f.outcome.decisions == plurality_vote(test).decisions;
  return {"filter threshold 1 equals plurality voting", same,
          same ? "identical decisions" : "decisions differ"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  std::vector<CheckResult> results;
  auto guarded = [&](const char* name, CheckResult (*fn)(std::uint64_t)) {
    try {
      results.push_back(fn(seed));
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("voting", check_voting);
  guarded("gradients", check_gradients);
  guarded("variance", check_variance_ratio);
  guarded("filter", check_filter_degenerate_threshold);
  return results;
}

}  // namespace dnnens
