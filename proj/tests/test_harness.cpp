#include "doctest.h"

#include "dnnens/errors.hpp"
#include "dnnens/harness.hpp"
#include "dnnens/neural_net.hpp"
#include "dnnens/synthetic.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace dnnens;
using dnnens::test::read_file;
using dnnens::test::TempDir;
using dnnens::test::write_file;

namespace {

// Two well separated Gaussian classes, 1000 x 5.
std::filesystem::path write_blobs(const TempDir& dir) {
  const auto path = dir / "blobs.csv";
  write_csv(make_gaussian_classes(1000, 5, 2, 3.0, 4), path);
  return path;
}

ExperimentConfig blob_config(const std::filesystem::path& csv) {
  ExperimentConfig cfg;
  cfg.dataset_name = "blobs";
  cfg.dataset_path = csv;
  cfg.hidden_sizes = {32, 16};
  cfg.seed = 3;
  return cfg;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("seeds are derived per learner") {
  const RunSeeds a = RunSeeds::derive(1, 7);
  const RunSeeds b = RunSeeds::derive(1, 3);
  CHECK(a.learners.size() == 7);
  CHECK(std::equal(b.learners.begin(), b.learners.end(), a.learners.begin()));
  CHECK(a.split != a.plan);
  CHECK(RunSeeds::derive(2, 7).learners[0] != a.learners[0]);
}

TEST_CASE("configuration file") {
  TempDir dir("cfg");
  write_file(dir / "exp.ini",
             "name = demo\nseed = 12\nn_learners = 5\noutput = out\n"
             "[data]\npath = data/x.csv\nlabel = y\n"
             "[mlp]\nhidden = 64, 32\nepochs = 3\n"
             "[fusion]\nstrategies = plurality, proposed\nthreshold = 3\nweights = inverse_variance\n"
             "level1_source = in_sample\n");
  const ExperimentConfig cfg = load_config(dir / "exp.ini");
  CHECK(cfg.dataset_name == "demo");
  CHECK(cfg.seed == 12);
  CHECK(cfg.n_learners == 5);
  CHECK(cfg.dataset_path == dir.path() / "data/x.csv");
  CHECK(cfg.output_dir == dir.path() / "out");
  CHECK(cfg.csv.label_name == "y");
  CHECK(cfg.hidden_sizes == std::vector<std::size_t>{64, 32});
  CHECK(cfg.mlp.epochs == 3);
  CHECK(cfg.strategies == std::vector<Strategy>{Strategy::plurality, Strategy::proposed});
  CHECK(cfg.effective_threshold() == 3);
  CHECK(cfg.weight_source == WeightSource::inverse_variance);
  CHECK(cfg.level1_source == Level1Source::in_sample);
  CHECK_NOTHROW(cfg.validate());

  write_file(dir / "typo.ini", "[mlp]\nepoch = 3\n");
  CHECK_THROWS_AS(load_config(dir / "typo.ini"), ConfigError);
  write_file(dir / "nan.ini", "seed = abc\n");
  CHECK_THROWS_AS(load_config(dir / "nan.ini"), ConfigError);
}

TEST_CASE("configuration validation names the field") {
  ExperimentConfig cfg;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("data.path") != std::string::npos);
  }
  cfg.dataset_path = "x.csv";
  CHECK(cfg.effective_threshold() == 6);
  cfg.threshold = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.threshold.reset();
  cfg.n_learners = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_learners = 1;
  CHECK(cfg.effective_threshold() == 1);
}

TEST_CASE("a single learner is its own ensemble") {
  TempDir dir("h");
  ExperimentConfig cfg = blob_config(write_blobs(dir));
  cfg.n_learners = 1;
  cfg.strategies = {Strategy::plurality};
  const RunReport r = run_experiment(cfg);
  REQUIRE(r.learner_accuracy.size() == 1);
  CHECK(r.strategy_accuracy.at("plurality") == r.learner_accuracy[0]);
  CHECK(std::isnan(r.learner_oob_accuracy[0]));
}

TEST_CASE("blob experiment") {
  TempDir dir("h");
  ExperimentConfig cfg = blob_config(write_blobs(dir));
  cfg.output_dir = dir / "out";
  const RunReport r = run_experiment(cfg);

  CHECK(r.n_train == 800);
  CHECK(r.n_test == 200);
  CHECK(r.strategy_accuracy.size() == 6);
  CHECK(r.strategy_accuracy.at("proposed") >= r.mean_accuracy);

  const double mean =
      std::accumulate(r.learner_accuracy.begin(), r.learner_accuracy.end(), 0.0) / 7.0;
  CHECK(std::abs(r.mean_accuracy - mean) <= 1e-12);
  CHECK(r.routes.confident + r.routes.meta + r.routes.fallback == r.n_test);
  for (const auto& [name, acc] : r.strategy_accuracy) {
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(r.outcomes.at(name).size() == r.n_test);
  }
  CHECK(r.threshold == 6);
  CHECK(r.weights.size() == 7);

  for (std::size_t j = 0; j < 7; ++j)
    CHECK(std::filesystem::exists(cfg.output_dir / "models" / ("learner_" + std::to_string(j) + ".mlp")));
  CHECK(std::filesystem::exists(cfg.output_dir / "models" / "plan.json"));
  CHECK(std::filesystem::exists(cfg.output_dir / "models" / "meta.gbt"));
  const ResamplePlan plan = read_plan_manifest(cfg.output_dir / "models" / "plan.json");
  CHECK(plan.train_size() == 800);

  // Persisted learners reproduce the reported accuracies.
  const PreparedData data = prepare_data(cfg);
  for (std::size_t j = 0; j < 7; ++j) {
    const MlpModel m = load_mlp(cfg.output_dir / "models" / ("learner_" + std::to_string(j) + ".mlp"));
    const auto pred = predict_labels(predict_proba(m, data.test.features));
    double hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.test.labels[i];
    CHECK(hits / 200.0 == r.learner_accuracy[j]);
  }
}

TEST_CASE("reports are reproducible and round trip") {
  TempDir dir("h");
  ExperimentConfig cfg = blob_config(write_blobs(dir));
  cfg.mlp.epochs = 5;
  cfg.n_learners = 3;

  const RunReport a = run_experiment(cfg);
  cfg.threads = 3;
  const RunReport b = run_experiment(cfg);
  emit_report(a, dir / "a");
  emit_report(b, dir / "b");
  for (const char* f : {"report.json", "accuracy_table.csv", "decisions.csv", "decisions.json"})
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));

  const RunReport back = read_report(dir / "a");
  CHECK(back.seed == a.seed);
  CHECK(back.n_train == a.n_train);
  CHECK(back.learner_accuracy == a.learner_accuracy);
  CHECK(back.learner_final_loss == a.learner_final_loss);
  CHECK(back.learner_oob_variance == a.learner_oob_variance);
  CHECK(back.mean_accuracy == a.mean_accuracy);
  CHECK(back.weights == a.weights);
  CHECK(back.strategy_accuracy == a.strategy_accuracy);
  CHECK(back.rejected_count == a.rejected_count);
  CHECK(back.routes.meta == a.routes.meta);
  CHECK(back.variance.ratio == a.variance.ratio);
  CHECK(back.variance.learner_variance == a.variance.learner_variance);
  CHECK(back.timings_ms == a.timings_ms);
  CHECK(back.config == a.config);

  const std::string table = read_file(dir / "a" / "accuracy_table.csv");
  CHECK(count_lines(table) == 2);
  CHECK(table.rfind("dataset,plurality,meta,proposed\nblobs,", 0) == 0);
  std::istringstream rows(table);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  CHECK(std::count(row.begin(), row.end(), ',') == 3);

  const auto manifest = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  CHECK(manifest.at("seed").get<std::uint64_t>() == cfg.seed);
  CHECK(manifest.at("config").at("seed").get<std::uint64_t>() == cfg.seed);
  CHECK(count_lines(read_file(dir / "a" / "decisions.csv")) == 1 + 6 * a.n_test);
}

TEST_CASE("errors carry the failing stage") {
  TempDir dir("h");
  write_file(dir / "bad.csv", "a,label\n1,x\n2\n");
  ExperimentConfig cfg;
  cfg.dataset_path = dir / "bad.csv";
  try {
    run_experiment(cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("load: ", 0) == 0);
  }
}

TEST_CASE("predefined train and test files") {
  TempDir dir("h");
  const Dataset all = make_gaussian_classes(300, 4, 3, 3.0, 9);
  std::vector<std::size_t> head(200), tail(100);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), std::size_t{200});
  write_csv(all.subset(head), dir / "train.csv");
  write_csv(all.subset(tail), dir / "test.csv");

  ExperimentConfig cfg;
  cfg.train_path = dir / "train.csv";
  cfg.test_path = dir / "test.csv";
  cfg.hidden_sizes = {16, 8};
  cfg.mlp.epochs = 5;
  cfg.n_learners = 3;
  cfg.strategies = {Strategy::plurality, Strategy::proposed};
  const RunReport r = run_experiment(cfg);
  CHECK(r.n_train == 200);
  CHECK(r.n_test == 100);
  CHECK(r.test_sample_ids.front() == 0);
  CHECK(r.dataset_name == "train");
}

TEST_CASE("sweep") {
  TempDir dir("h");
  ExperimentConfig cfg = blob_config(write_blobs(dir));
  cfg.mlp.epochs = 4;
  cfg.hidden_sizes = {16, 8};
  cfg.output_dir = dir / "out";
  cfg.strategies = {Strategy::plurality};

  SUBCASE("three sizes, recomputed from the persisted learners") {
    const SweepReport s = sweep(cfg, 3);
    REQUIRE(s.rows.size() == 3);
    const PreparedData data = prepare_data(cfg);
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(s.rows[k - 1].size == k);
      const auto models = cfg.output_dir / "sweep" / ("size_" + std::to_string(k)) / "models";
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const MlpModel m = load_mlp(models / ("learner_" + std::to_string(j) + ".mlp"));
        const auto pred = predict_labels(predict_proba(m, data.test.features));
        double hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.test.labels[i];
        total += hits / static_cast<double>(pred.size());
      }
      CHECK(std::abs(total / static_cast<double>(k) - s.rows[k - 1].mean_individual_accuracy) <= 1e-12);
    }
    emit_sweep(s, cfg.output_dir);
    CHECK(count_lines(read_file(cfg.output_dir / "sweep.csv")) == 4);
  }

  SUBCASE("default sizes") {
    cfg.output_dir.clear();
    const SweepReport s = sweep(cfg);
    REQUIRE(s.rows.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) CHECK(s.rows[k].size == k + 1);
  }
}

}  // TEST_SUITE
