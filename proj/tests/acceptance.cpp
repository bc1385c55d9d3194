// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "dnnens/boosted_trees.hpp"
#include "dnnens/config.hpp"
#include "dnnens/fusion.hpp"
#include "dnnens/harness.hpp"
#include "dnnens/neural_net.hpp"

#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace dnnens;

namespace {

using Clock = std::chrono::steady_clock;

enum class Verdict { pass, fail, skip };

struct Result {
  Verdict verdict;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

const std::filesystem::path kSource = DNNENS_SOURCE_DIR;
constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

ExperimentConfig benchmark_config(std::uint64_t seed) {
  ExperimentConfig cfg = load_config(kSource / "configs" / "synthetic3.ini");
  cfg.seed = seed;
  cfg.output_dir.clear();
  return cfg;
}

// Criteria 6 and 7 share the five benchmark runs.
const std::vector<RunReport>& benchmark_runs() {
  static const std::vector<RunReport> runs = [] {
    std::vector<RunReport> out;
    for (auto seed : kSeeds) out.push_back(run_experiment(benchmark_config(seed)));
    return out;
  }();
  return runs;
}
double benchmark_seconds = 0.0;

Result variance_reduction() {
  const auto t = Clock::now();
  std::mt19937_64 rng(20240);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd outputs(10000, 7);
  for (Eigen::Index i = 0; i < outputs.size(); ++i) outputs(i) = normal(rng);
  const VarianceReport r = variance_report(outputs);
  const double lo = (1.0 / 7.0) * 0.85, hi = (1.0 / 7.0) * 1.15;
  const double secs = seconds_since(t);
  const bool ok = r.ratio >= lo && r.ratio <= hi && secs < 5.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "ratio " + fmt(r.ratio) + " in [" + fmt(lo) + ", " + fmt(hi) + "], " + fmt(secs, 2) + " s"};
}

Result gradient_check() {
  const auto t = Clock::now();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  MlpConfig cfg;
  cfg.layer_sizes = {4, 2, 3, 2};
  cfg.seed = 5;
  MlpModel m = init_mlp<double>(cfg);
  for (auto& b : m.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * normal(rng);
  Eigen::MatrixXd x(8, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  std::vector<int> y(8);
  for (auto& v : y) v = static_cast<int>(rng() % 2);

  const MlpGradients g = gradients(m, x, y);
  constexpr double h = 1e-5;
  double worst = 0.0;
  std::size_t coords = 0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss(m, x, y);
    param = saved - h;
    const double down = loss(m, x, y);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
    ++coords;
  };
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    for (Eigen::Index i = 0; i < m.weights[l].size(); ++i)
      probe(m.weights[l].data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) probe(m.biases[l](i), g.biases[l](i));
  }
  const double secs = seconds_since(t);
  return {worst < 1e-4 && secs < 5.0 ? Verdict::pass : Verdict::fail,
          std::to_string(coords) + " coordinates, max relative error " +
              sci(worst) + ", " + fmt(secs, 2) + " s"};
}

PredictionMatrix one_hot(const std::vector<std::vector<int>>& votes, std::size_t classes) {
  std::vector<Eigen::MatrixXd> per;
  for (const auto& v : votes) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v.size()),
                                              static_cast<Eigen::Index>(classes));
    for (std::size_t s = 0; s < v.size(); ++s) m(static_cast<Eigen::Index>(s), v[s]) = 1.0;
    per.push_back(std::move(m));
  }
  return PredictionMatrix(std::move(per));
}

Result voting_oracles() {
  const auto t = Clock::now();
  std::size_t mismatches = 0, patterns = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t classes = 1; classes <= 3; ++classes) {
      std::size_t total = 1;
      for (std::size_t j = 0; j < n; ++j) total *= classes;
      std::vector<std::vector<int>> votes(n, std::vector<int>(total));
      for (std::size_t s = 0; s < total; ++s) {
        std::size_t code = s;
        for (std::size_t j = 0; j < n; ++j, code /= classes)
          votes[j][s] = static_cast<int>(code % classes);
      }
      const PredictionMatrix pm = one_hot(votes, classes);
      const auto plural = plurality_vote(pm).decisions;
      const auto major = majority_vote(pm).decisions;
      for (std::size_t s = 0; s < total; ++s) {
        std::vector<std::size_t> counts(classes, 0);
        for (std::size_t j = 0; j < n; ++j) ++counts[static_cast<std::size_t>(votes[j][s])];
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
          if (counts[c] > counts[best]) best = c;
        int strict = kRejected;
        for (std::size_t c = 0; c < classes; ++c)
          if (2 * counts[c] > n) strict = static_cast<int>(c);
        mismatches += plural[s] != static_cast<int>(best);
        mismatches += major[s] != strict;
        ++patterns;
      }
    }
  }
  const double secs = seconds_since(t);
  return {mismatches == 0 && secs < 5.0 ? Verdict::pass : Verdict::fail,
          std::to_string(patterns) + " vote patterns, " + std::to_string(mismatches) +
              " mismatches, " + fmt(secs, 2) + " s"};
}

Result filter_contract() {
  std::mt19937_64 rng(4242);
  std::size_t leaks = 0, disagreements = 0, routed = 0, confident = 0;
  auto random_votes = [&](std::size_t samples, const std::vector<int>& truth) {
    // Each learner follows the truth with a per-matrix reliability.
    const double reliable = std::uniform_real_distribution<double>(0.4, 0.95)(rng);
    std::vector<std::vector<int>> v(7, std::vector<int>(samples));
    std::bernoulli_distribution follow(reliable);
    for (auto& row : v)
      for (std::size_t s = 0; s < samples; ++s)
        row[s] = follow(rng) ? truth[s] : static_cast<int>(rng() % 3);
    return one_hot(v, 3);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> train_labels(60), test_labels(30);
    for (auto& l : train_labels) l = static_cast<int>(rng() % 3);
    for (auto& l : test_labels) l = static_cast<int>(rng() % 3);
    const PredictionMatrix train = random_votes(60, train_labels);
    const PredictionMatrix test = random_votes(30, test_labels);
    const BoostConfig boost;
    const FilteredFusion f = filtered_fuse(train, train_labels, test, 6, boost);
    const VoteTally tally = tally_votes(test);
    for (std::size_t s = 0; s < test.n_samples(); ++s) {
      if (tally.top_count(s) >= 6) {
        ++confident;
        leaks += f.outcome.routes[s] == Route::meta_learner;
      }
      routed += f.outcome.routes[s] == Route::meta_learner;
    }
    const FilteredFusion one = filtered_fuse(train, train_labels, test, 1, boost);
    disagreements += one.outcome.decisions != plurality_vote(test).decisions;
  }
  return {leaks == 0 && disagreements == 0 && routed > 0 ? Verdict::pass : Verdict::fail,
          "1000 matrices: " + std::to_string(confident) + " confident samples, " +
              std::to_string(leaks) + " sent to the meta-learner; " + std::to_string(routed) +
              " meta routes; threshold-1 mismatches " + std::to_string(disagreements)};
}

Result booster_sanity() {
  Eigen::MatrixXd xor_x(4, 2);
  xor_x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> xor_y{0, 1, 1, 0};
  BoostConfig xor_cfg;
  xor_cfg.rounds = 20;
  xor_cfg.max_depth = 2;
  xor_cfg.min_child_weight = 0.0;
  const auto pred = predict_labels(fit_boosted(xor_x, xor_y, 2, xor_cfg), xor_x);
  double hits = 0;
  for (std::size_t i = 0; i < 4; ++i) hits += pred[i] == xor_y[i];
  const double xor_acc = hits / 4.0;

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(400, 6);
  std::vector<int> y(400);
  for (Eigen::Index r = 0; r < 400; ++r) {
    for (Eigen::Index c = 0; c < 6; ++c) x(r, c) = normal(rng);
    const double s = x(r, 0) - x(r, 2) + 0.7 * normal(rng);
    y[static_cast<std::size_t>(r)] = s < -0.5 ? 0 : (s < 0.5 ? 1 : (s < 1.5 ? 2 : 3));
  }
  const BoostedModel m = fit_boosted(x, y, 4, BoostConfig{});
  double worst_increase = 0.0;
  for (std::size_t r = 1; r < m.train_loss.size(); ++r)
    worst_increase = std::max(worst_increase, m.train_loss[r] - m.train_loss[r - 1]);
  const bool ok = xor_acc == 1.0 && worst_increase <= 1e-9;
  return {ok ? Verdict::pass : Verdict::fail,
          "xor accuracy " + fmt(xor_acc, 2) + "; 4-class loss " + fmt(m.train_loss.front()) +
              " -> " + fmt(m.train_loss.back()) + ", largest increase " +
              sci(worst_increase)};
}

Result ensemble_beats_mean() {
  const auto t = Clock::now();
  const auto& runs = benchmark_runs();
  benchmark_seconds = seconds_since(t);
  std::size_t wins = 0;
  std::string detail;
  for (const auto& r : runs) {
    const double proposed = r.strategy_accuracy.at("proposed");
    wins += proposed >= r.mean_accuracy;
    detail += " seed " + std::to_string(r.seed) + ": " + fmt(proposed) + " vs " +
              fmt(r.mean_accuracy) + ";";
  }
  const bool ok = wins >= 4 && benchmark_seconds < 180.0;
  return {ok ? Verdict::pass : Verdict::fail,
          std::to_string(wins) + "/5 seeds with proposed >= mean individual," + detail + " " +
              fmt(benchmark_seconds, 1) + " s"};
}

Result proposed_vs_plurality() {
  std::size_t wins = 0;
  double worst_gap = 0.0;
  std::string detail;
  for (const auto& r : benchmark_runs()) {
    const double proposed = r.strategy_accuracy.at("proposed");
    const double plural = r.strategy_accuracy.at("plurality");
    wins += proposed >= plural;
    worst_gap = std::max(worst_gap, plural - proposed);
    detail += " seed " + std::to_string(r.seed) + ": " + fmt(proposed) + " vs " + fmt(plural) +
              " (meta routes " + std::to_string(r.routes.meta) + ");";
  }
  const bool ok = wins >= 3 && worst_gap <= 0.01 + 1e-12;
  return {ok ? Verdict::pass : Verdict::fail,
          std::to_string(wins) + "/5 seeds with proposed >= plurality, largest shortfall " +
              fmt(100.0 * worst_gap, 2) + " pp;" + detail};
}

Result spambase_smoke() {
  std::filesystem::path csv;
  if (const char* env = std::getenv("DNNENS_SPAMBASE")) csv = env;
  else if (std::filesystem::exists(kSource / "data" / "spambase.data"))
    csv = kSource / "data" / "spambase.data";
  if (csv.empty() || !std::filesystem::exists(csv))
    return {Verdict::skip, "no Spambase CSV (set DNNENS_SPAMBASE or add data/spambase.data)"};
  const auto t = Clock::now();
  ExperimentConfig cfg = load_config(kSource / "configs" / "spambase.ini");
  cfg.dataset_path = csv;
  cfg.output_dir.clear();
  const RunReport r = run_experiment(cfg);
  const double secs = seconds_since(t);
  const double acc = r.strategy_accuracy.at("proposed");
  const bool ok = acc >= 0.90 && acc <= 0.97 && secs < 1800.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "proposed accuracy " + fmt(acc) + " (band [0.90, 0.97]), " + fmt(secs, 1) + " s"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DNNENS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Result determinism() {
  test::TempDir dir("acceptance");
  const std::string base =
      "run --config \"" + (kSource / "configs" / "synthetic3.ini").string() + "\" --seed 11";
  std::vector<std::string> tables;
  for (const char* threads : {"1", "1", "4", "4"}) {
    const auto out = dir / ("run_" + std::to_string(tables.size()));
    if (run_cli(base + " --threads " + threads + " --out \"" + out.string() + "\"") != 0)
      return {Verdict::fail, "run exited with an error"};
    tables.push_back(test::read_file(out / "accuracy_table.csv"));
  }
  const bool ok = !tables[0].empty() && tables[0] == tables[1] && tables[2] == tables[3] &&
                  tables[0] == tables[2];
  return {ok ? Verdict::pass : Verdict::fail,
          ok ? "accuracy tables byte-identical across 4 runs (threads 1, 1, 4, 4)"
             : "accuracy tables differ"};
}

Result sweep_shape() {
  const auto t = Clock::now();
  std::size_t wins = 0;
  bool shape_ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const SweepReport s = sweep(benchmark_config(seed), 8);
    shape_ok = shape_ok && s.rows.size() == 8;
    for (std::size_t k = 0; k < s.rows.size(); ++k) shape_ok = shape_ok && s.rows[k].size == k + 1;
    if (s.rows.size() < 7) continue;
    const double one = s.rows[0].proposed_accuracy, seven = s.rows[6].proposed_accuracy;
    wins += seven >= one;
    detail += " seed " + std::to_string(seed) + ": " + fmt(one) + " -> " + fmt(seven) + ";";
  }
  return {shape_ok && wins >= 4 ? Verdict::pass : Verdict::fail,
          std::string(shape_ok ? "8 rows per sweep, " : "bad sweep shape, ") +
              std::to_string(wins) + "/5 seeds with size 7 >= size 1;" + detail + " " +
              fmt(seconds_since(t), 1) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"variance reduction by ensemble size", variance_reduction},
      {"analytic gradients vs finite differences", gradient_check},
      {"voting rules vs exhaustive counting", voting_oracles},
      {"confidence filter contract", filter_contract},
      {"booster sanity", booster_sanity},
      {"ensemble accuracy vs mean individual accuracy", ensemble_beats_mean},
      {"proposed fusion vs plurality voting", proposed_vs_plurality},
      {"Spambase smoke run", spambase_smoke},
      {"determinism with and without parallel training", determinism},
      {"ensemble-size sweep", sweep_shape},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::strtoul(argv[i], nullptr, 10));

  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const std::size_t number = i + 1;
    if (!only.empty() && !only.count(number)) continue;
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {Verdict::fail, std::string("error: ") + e.what()};
    }
    const char* tag = r.verdict == Verdict::pass ? "PASS" : (r.verdict == Verdict::fail ? "FAIL" : "SKIP");
    failed += r.verdict == Verdict::fail;
    std::cout << "criterion " << number << " " << tag << "  " << criteria[i].first << ": "
              << r.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
