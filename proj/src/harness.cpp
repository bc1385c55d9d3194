#include "dnnens/harness.hpp"

#include "dnnens/errors.hpp"
#include "dnnens/neural_net.hpp"
#include "dnnens/seed.hpp"
#include "dnnens/version.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <thread>

namespace dnnens {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Re-raises module errors with the failing stage prefixed, keeping the type
// so the CLI can still map it to an exit code.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const TrainingDivergence&) {
    throw;
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(stage + ": " + e.what());
  } catch (const ContractError& e) {
    throw ContractError(stage + ": " + e.what());
  } catch (const DegenerateWeightsError& e) {
    throw DegenerateWeightsError(stage + ": " + e.what());
  }
}

struct TrainedLearner {
  MlpModel model;
  Eigen::MatrixXd train_proba;
  Eigen::MatrixXd test_proba;
};

std::string learner_file(std::size_t j) { return "learner_" + std::to_string(j) + ".mlp"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

nlohmann::json normalizer_json(const NormalizerState& n) {
  return {{"mean", std::vector<double>(n.mean.begin(), n.mean.end())},
          {"stddev", std::vector<double>(n.stddev.begin(), n.stddev.end())}};
}

std::string decision_text(const RunReport& r, int decision) {
  if (decision == kRejected) return "REJECTED";
  return r.class_names.at(static_cast<std::size_t>(decision));
}

double direct_accuracy(const Eigen::MatrixXd& proba, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  const auto predicted = predict_labels(proba);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Runs fn(0..count-1) on up to `threads` workers; the first failure (by job
// index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < count;) {
      try {
        fn(j);
      } catch (...) {
        failures[j] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(threads, count);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

// Learner j of `plan`. Plan indices address `rows` of data (all rows when empty).
MlpModel fit_learner(const ExperimentConfig& config, const Dataset& data,
                     std::span<const std::size_t> rows, const ResamplePlan& plan, std::size_t j,
                     std::uint64_t seed) {
  std::vector<std::size_t> indices = materialize(plan, j).all_indices();
  if (!rows.empty())
    for (auto& i : indices) i = rows[i];
  MlpConfig cfg = config.mlp;
  cfg.layer_sizes =
      MlpConfig::for_data(data.schema.n_features, data.schema.n_classes, config.hidden_sizes)
          .layer_sizes;
  cfg.seed = seed;
  MlpModel model = init_mlp<double>(cfg);
  try {
    dnnens::train(model, data.features, data.labels, indices);
  } catch (const TrainingDivergence& e) {
    throw TrainingDivergence(e.epoch(), e.batch(), "learner " + std::to_string(j));
  }
  return model;
}

// Out-of-fold ensemble predictions on the training set: for each fold, a
// fresh ensemble is resampled and trained on the other folds and predicts
// the held-out rows.
PredictionMatrix cross_fit_predictions(const ExperimentConfig& config, const Dataset& train,
                                       const RunSeeds& seeds) {
  const std::size_t n = config.n_learners;
  const std::size_t k = config.cross_fit_folds;
  const std::size_t size = train.size();
  if (size < k) throw ConfigError("fusion.cross_fit_folds: more folds than training samples");

  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seeds.plan, "cross_fit"));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(size);
  for (std::size_t p = 0; p < size; ++p) fold_of[order[p]] = p % k;

  std::vector<std::vector<std::size_t>> inside(k), held(k);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? held : inside)[f].push_back(i);
  std::vector<ResamplePlan> plans;
  for (std::size_t f = 0; f < k; ++f)
    plans.push_back(build_plan(inside[f].size(), n, derive_seed(seeds.plan, f + 1)));

  const auto cols = static_cast<Eigen::Index>(train.schema.n_classes);
  std::vector<Eigen::MatrixXd> out(n, Eigen::MatrixXd(static_cast<Eigen::Index>(size), cols));
  std::vector<Eigen::MatrixXd> parts(k * n);
  parallel_for(k * n, config.threads, [&](std::size_t job) {
    const std::size_t f = job / n, j = job % n;
    const MlpModel model = fit_learner(config, train, inside[f], plans[f], j,
                                       derive_seed(seeds.learners[j], f + 1));
    parts[job] = predict_proba(model, train.subset(held[f]).features);
  });
  for (std::size_t job = 0; job < k * n; ++job) {
    const std::size_t f = job / n, j = job % n;
    for (std::size_t r = 0; r < held[f].size(); ++r)
      out[j].row(static_cast<Eigen::Index>(held[f][r])) =
          parts[job].row(static_cast<Eigen::Index>(r));
  }
  return PredictionMatrix(std::move(out));
}

std::string default_name(const ExperimentConfig& c) {
  if (!c.dataset_name.empty()) return c.dataset_name;
  const auto& p = c.dataset_path.empty() ? c.train_path : c.dataset_path;
  return p.stem().string();
}

}  // namespace

RunSeeds RunSeeds::derive(std::uint64_t master, std::size_t n_learners) {
  RunSeeds s;
  s.split = derive_seed(master, "split");
  s.plan = derive_seed(master, "plan");
  s.meta = derive_seed(master, "meta");
  for (std::size_t j = 0; j < n_learners; ++j) s.learners.push_back(derive_seed(master, j));
  return s;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData out;
  if (config.predefined_split()) {
    out.train = load_csv(config.train_path, config.csv);
    CsvOptions test_options = config.csv;
    test_options.known_classes = out.train.schema.class_names;
    out.test = load_csv(config.test_path, test_options);
    if (out.test.schema.n_features != out.train.schema.n_features)
      throw DataError("test file has " + std::to_string(out.test.schema.n_features) +
                      " features, training file has " +
                      std::to_string(out.train.schema.n_features));
    out.test_sample_ids.resize(out.test.size());
    std::iota(out.test_sample_ids.begin(), out.test_sample_ids.end(), std::size_t{0});
  } else {
    const Dataset all = load_csv(config.dataset_path, config.csv);
    all.schema.validate();
    SplitSpec spec = config.split;
    spec.seed = RunSeeds::derive(config.seed, 0).split;
    const SplitIndices idx = split_indices(all.labels, all.schema.n_classes, spec);
    out.train = all.subset(idx.train);
    out.test = all.subset(idx.test);
    out.test_sample_ids = idx.test;
  }
  out.train.schema.validate();
  out.train.validate();
  out.test.validate();
  out.normalizer = fit_normalizer(out.train);
  apply_normalizer_inplace(out.normalizer, out.train.features);
  apply_normalizer_inplace(out.normalizer, out.test.features);
  return out;
}

RunReport run_experiment(const ExperimentConfig& config) {
  const auto t_start = Clock::now();
  in_stage("config", [&] { config.validate(); });

  RunReport report;
  report.dataset_name = default_name(config);
  report.seed = config.seed;
  report.n_learners = config.n_learners;
  report.threshold = config.effective_threshold();
  report.config = config_to_json(config);

  const PreparedData data = in_stage("load", [&] { return prepare_data(config); });
  const Dataset& train = data.train;
  const Dataset& test = data.test;
  const std::size_t n = config.n_learners;
  const std::size_t classes = train.schema.n_classes;
  report.n_classes = classes;
  report.class_names = train.schema.class_names;
  report.n_train = train.size();
  report.n_test = test.size();
  report.test_sample_ids = data.test_sample_ids;
  report.test_labels = test.labels;
  report.timings_ms["load"] = elapsed_ms(t_start);

  const RunSeeds seeds = RunSeeds::derive(config.seed, n);
  const ResamplePlan plan =
      in_stage("resample", [&] { return build_plan(train.size(), n, seeds.plan); });

  const std::filesystem::path models_dir =
      config.output_dir.empty() ? std::filesystem::path{} : config.output_dir / "models";
  if (!models_dir.empty()) {
    in_stage("persist", [&] {
      std::error_code ec;
      std::filesystem::create_directories(models_dir, ec);
      if (ec) throw DataError("cannot create '" + models_dir.string() + "': " + ec.message());
      write_plan_manifest(plan, models_dir / "plan.json");
      write_text(models_dir / "normalizer.json", normalizer_json(data.normalizer).dump(1) + "\n");
    });
  }

  // Learners share no mutable state; each job owns its result slot.
  const auto t_train = Clock::now();
  std::vector<TrainedLearner> learners(n);
  in_stage("train", [&] {
    parallel_for(n, config.threads, [&](std::size_t j) {
      TrainedLearner& out = learners[j];
      out.model = fit_learner(config, train, {}, plan, j, seeds.learners[j]);
      out.train_proba = predict_proba(out.model, train.features);
      out.test_proba = predict_proba(out.model, test.features);
    });
  });
  report.timings_ms["train"] = elapsed_ms(t_train);

  if (!models_dir.empty()) {
    in_stage("persist", [&] {
      for (std::size_t j = 0; j < n; ++j) save_mlp(learners[j].model, models_dir / learner_file(j));
    });
  }

  const auto t_fusion = Clock::now();
  std::vector<Eigen::MatrixXd> train_probs, test_probs;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& l = learners[j];
    report.learner_accuracy.push_back(direct_accuracy(l.test_proba, test.labels));
    report.learner_final_loss.push_back(l.model.trace.final_loss());

    const auto oob = out_of_bag(plan, j);
    if (oob.empty()) {
      report.learner_oob_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
      report.learner_oob_variance.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      Eigen::MatrixXd oob_proba(static_cast<Eigen::Index>(oob.size()),
                                static_cast<Eigen::Index>(classes));
      std::vector<int> oob_labels;
      for (std::size_t i = 0; i < oob.size(); ++i) {
        oob_proba.row(static_cast<Eigen::Index>(i)) =
            l.train_proba.row(static_cast<Eigen::Index>(oob[i]));
        oob_labels.push_back(train.labels[oob[i]]);
      }
      report.learner_oob_accuracy.push_back(direct_accuracy(oob_proba, oob_labels));
      report.learner_oob_variance.push_back(probability_error_variance(oob_proba, oob_labels));
    }
    train_probs.push_back(l.train_proba);
    test_probs.push_back(l.test_proba);
  }
  report.mean_accuracy =
      std::accumulate(report.learner_accuracy.begin(), report.learner_accuracy.end(), 0.0) /
      static_cast<double>(n);

  // Threshold 1 accepts every training instance, so the filtered meta-learner
  // is never fitted.
  const bool needs_meta = config.runs(Strategy::meta) ||
                          (config.runs(Strategy::proposed) && report.threshold > 1);
  const PredictionMatrix pm_train =
      config.level1_source == Level1Source::cross_fit && needs_meta
          ? in_stage("cross_fit", [&] { return cross_fit_predictions(config, train, seeds); })
          : PredictionMatrix(std::move(train_probs));
  report.timings_ms["cross_fit"] = elapsed_ms(t_fusion);
  const PredictionMatrix pm_test(std::move(test_probs), {}, data.test_sample_ids);
  if (pm_test.n_samples() >= 2) report.variance = variance_report(pm_test);

  BoostConfig boost = config.boost;
  boost.seed = seeds.meta;

  for (Strategy s : config.strategies) {
    const std::string name(strategy_name(s));
    FusionOutcome outcome = in_stage("fusion/" + name, [&]() -> FusionOutcome {
      switch (s) {
        case Strategy::average:
          return model_average(pm_test);
        case Strategy::weighted_average: {
          WeightVector w = uniform_weights(n);
          const bool have_oob = n > 1;
          if (config.weight_source == WeightSource::accuracy && have_oob) {
            try {
              w = weights_from_accuracy(report.learner_oob_accuracy);
            } catch (const DegenerateWeightsError&) {
              report.warnings.push_back(
                  "weighted_average: every out-of-bag accuracy is zero; using uniform weights");
            }
          } else if (config.weight_source == WeightSource::inverse_variance && have_oob) {
            w = weights_from_inverse_variance(report.learner_oob_variance);
          }
          report.weights.assign(w.values.begin(), w.values.end());
          return model_average(pm_test, w);
        }
        case Strategy::plurality:
          return plurality_vote(pm_test);
        case Strategy::majority: {
          auto out = majority_vote(pm_test);
          report.rejected_count = out.rejected_count();
          return out;
        }
        case Strategy::meta: {
          const BoostedModel meta = fit_meta(pm_train, train.labels, boost, config.level1);
          if (!models_dir.empty()) save_boosted(meta, models_dir / "meta.gbt");
          return meta_fuse(meta, pm_test, config.level1);
        }
        case Strategy::proposed: {
          FilteredFusion fitted = filtered_fuse(pm_train, train.labels, pm_test,
                                                report.threshold, boost, config.level1);
          if (!models_dir.empty() && fitted.meta)
            save_boosted(*fitted.meta, models_dir / "meta_filtered.gbt");
          report.difficult_train_count = fitted.difficult_train_count;
          report.routes.confident = fitted.outcome.route_count(Route::confident_vote);
          report.routes.meta = fitted.outcome.route_count(Route::meta_learner);
          report.routes.fallback = fitted.outcome.route_count(Route::fallback);
          for (const auto& w : fitted.outcome.warnings)
            report.warnings.push_back("proposed: " + w);
          return std::move(fitted.outcome);
        }
      }
      throw ContractError("unknown strategy");
    });
    report.strategy_accuracy[name] = outcome.accuracy(test.labels);
    report.outcomes[name] = std::move(outcome);
  }
  report.timings_ms["fusion"] = elapsed_ms(t_fusion);
  report.timings_ms["total"] = elapsed_ms(t_start);
  return report;
}

SweepReport sweep(const ExperimentConfig& config, std::size_t max_size) {
  if (max_size < 1) throw ConfigError("sweep: max size must be >= 1");
  SweepReport out;
  out.config = config_to_json(config);
  out.config["sweep_max_size"] = max_size;
  for (std::size_t k = 1; k <= max_size; ++k) {
    ExperimentConfig cfg = config;
    cfg.n_learners = k;
    cfg.threshold.reset();
    if (!cfg.runs(Strategy::proposed)) cfg.strategies.push_back(Strategy::proposed);
    if (!config.output_dir.empty())
      cfg.output_dir = config.output_dir / "sweep" / ("size_" + std::to_string(k));
    const RunReport r = run_experiment(cfg);
    if (!cfg.output_dir.empty()) emit_report(r, cfg.output_dir);
    out.rows.push_back({k, r.strategy_accuracy.at("proposed"), r.mean_accuracy});
  }
  return out;
}

nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset_name;
  j["seed"] = r.seed;
  j["n_learners"] = r.n_learners;
  j["n_classes"] = r.n_classes;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["class_names"] = r.class_names;
  // NaN (no out-of-bag set) is written as null.
  j["learner_accuracy"] = r.learner_accuracy;
  j["learner_oob_accuracy"] = r.learner_oob_accuracy;
  j["learner_oob_variance"] = r.learner_oob_variance;
  j["learner_final_loss"] = r.learner_final_loss;
  j["mean_accuracy"] = r.mean_accuracy;
  j["weights"] = r.weights;
  j["strategy_accuracy"] = r.strategy_accuracy;
  j["rejected_count"] = r.rejected_count;
  j["routes"] = {{"confident_vote", r.routes.confident},
                 {"meta_learner", r.routes.meta},
                 {"fallback", r.routes.fallback}};
  j["threshold"] = r.threshold;
  j["difficult_train_count"] = r.difficult_train_count;
  j["variance"] = {{"learner_variance", r.variance.learner_variance},
                   {"ensemble_variance", r.variance.ensemble_variance},
                   {"ratio", r.variance.ratio},
                   {"n_learners", r.variance.n_learners}};
  j["warnings"] = r.warnings;
  j["config"] = r.config;
  return j;
}

RunReport read_report(const std::filesystem::path& directory) {
  auto read_json = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw FormatError("cannot open '" + p.string() + "'");
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("'" + p.string() + "': " + e.what());
    }
  };
  auto doubles = [](const nlohmann::json& a) {
    std::vector<double> v;
    for (const auto& x : a)
      v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
    return v;
  };

  const nlohmann::json j = read_json(directory / "report.json");
  RunReport r;
  r.dataset_name = j.at("dataset").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_learners = j.at("n_learners").get<std::size_t>();
  r.n_classes = j.at("n_classes").get<std::size_t>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.class_names = j.at("class_names").get<std::vector<std::string>>();
  r.learner_accuracy = doubles(j.at("learner_accuracy"));
  r.learner_oob_accuracy = doubles(j.at("learner_oob_accuracy"));
  r.learner_oob_variance = doubles(j.at("learner_oob_variance"));
  r.learner_final_loss = doubles(j.at("learner_final_loss"));
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.weights = doubles(j.at("weights"));
  r.strategy_accuracy = j.at("strategy_accuracy").get<std::map<std::string, double>>();
  r.rejected_count = j.at("rejected_count").get<std::size_t>();
  r.routes.confident = j.at("routes").at("confident_vote").get<std::size_t>();
  r.routes.meta = j.at("routes").at("meta_learner").get<std::size_t>();
  r.routes.fallback = j.at("routes").at("fallback").get<std::size_t>();
  r.threshold = j.at("threshold").get<std::size_t>();
  r.difficult_train_count = j.at("difficult_train_count").get<std::size_t>();
  const auto& v = j.at("variance");
  r.variance = {v.at("learner_variance").get<double>(), v.at("ensemble_variance").get<double>(),
                v.at("ratio").get<double>(), v.at("n_learners").get<std::size_t>()};
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.config = j.at("config");
  if (std::filesystem::exists(directory / "timings.json"))
    r.timings_ms = read_json(directory / "timings.json").get<std::map<std::string, double>>();
  return r;
}

void emit_report(const RunReport& r, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw DataError("cannot create output directory '" + directory.string() + "': " +
                          ec.message());

  write_text(directory / "report.json", report_to_json(r).dump(2) + "\n");
  write_text(directory / "timings.json", nlohmann::json(r.timings_ms).dump(2) + "\n");

  // Shaped like the fusion comparison table: plurality | meta | proposed.
  {
    std::ostringstream csv;
    csv << "dataset,plurality,meta,proposed\n" << r.dataset_name;
    for (const char* s : {"plurality", "meta", "proposed"}) {
      auto it = r.strategy_accuracy.find(s);
      csv << ',' << (it == r.strategy_accuracy.end() ? "NA" : fixed(it->second));
    }
    csv << '\n';
    write_text(directory / "accuracy_table.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "sample_id,true_label,strategy,decision,route\n";
    nlohmann::json dj;
    dj["class_names"] = r.class_names;
    dj["sample_ids"] = r.test_sample_ids;
    dj["labels"] = r.test_labels;
    for (const auto& [name, outcome] : r.outcomes) {
      auto& entry = dj["strategies"][name];
      entry["decisions"] = outcome.decisions;
      auto& routes = entry["routes"] = nlohmann::json::array();
      for (std::size_t i = 0; i < outcome.size(); ++i) {
        routes.push_back(std::string(route_name(outcome.routes[i])));
        csv << r.test_sample_ids.at(i) << ',' << decision_text(r, r.test_labels.at(i)) << ','
            << name << ',' << decision_text(r, outcome.decisions[i]) << ','
            << route_name(outcome.routes[i]) << '\n';
      }
    }
    write_text(directory / "decisions.csv", csv.str());
    write_text(directory / "decisions.json", dj.dump(1) + "\n");
  }

  {
    nlohmann::json m;
    m["tool"] = "dnnens";
    m["version"] = kVersion;
    m["seed"] = r.seed;
    const RunSeeds seeds = RunSeeds::derive(r.seed, r.n_learners);
    m["derived_seeds"] = {{"split", seeds.split},
                          {"plan", seeds.plan},
                          {"meta", seeds.meta},
                          {"learners", seeds.learners}};
    m["output"] = directory.string();
    m["config"] = r.config;
    write_text(directory / "manifest.json", m.dump(2) + "\n");
  }

  {
    std::ostringstream t;
    t << "dataset        " << r.dataset_name << "  (train " << r.n_train << ", test "
      << r.n_test << ", classes " << r.n_classes << ")\n";
    t << "ensemble       " << r.n_learners << " learners, seed " << r.seed
      << ", filter threshold " << r.threshold << "\n\n";
    t << "learner  test_acc  oob_acc  final_loss\n";
    for (std::size_t j = 0; j < r.learner_accuracy.size(); ++j) {
      t << std::setw(7) << j << "  " << fixed(r.learner_accuracy[j], 4) << "    "
        << (std::isnan(r.learner_oob_accuracy[j]) ? "  n/a "
                                                  : fixed(r.learner_oob_accuracy[j], 4))
        << "   " << fixed(r.learner_final_loss[j], 4) << '\n';
    }
    t << "mean individual accuracy  " << fixed(r.mean_accuracy, 4) << "\n\n";
    t << "strategy            accuracy\n";
    for (const auto& [name, acc] : r.strategy_accuracy)
      t << std::left << std::setw(20) << name << std::right << fixed(acc, 4) << '\n';
    t << "\nmajority rule rejected  " << r.rejected_count << '\n';
    t << "proposed routes         confident " << r.routes.confident << ", meta "
      << r.routes.meta << ", fallback " << r.routes.fallback << " (difficult train cases "
      << r.difficult_train_count << ")\n";
    t << "variance ratio          " << fixed(r.variance.ratio, 4) << "  (1/n = "
      << fixed(1.0 / static_cast<double>(r.n_learners), 4) << ")\n";
    for (const auto& w : r.warnings) t << "warning: " << w << '\n';
    write_text(directory / "report.txt", t.str());
  }
}

void emit_sweep(const SweepReport& report, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw DataError("cannot create output directory '" + directory.string() + "'");
  std::ostringstream csv;
  csv << "size,proposed_accuracy,mean_individual_accuracy\n";
  nlohmann::json j;
  j["config"] = report.config;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    csv << row.size << ',' << fixed(row.proposed_accuracy) << ','
        << fixed(row.mean_individual_accuracy) << '\n';
    rows.push_back({{"size", row.size},
                    {"proposed_accuracy", row.proposed_accuracy},
                    {"mean_individual_accuracy", row.mean_individual_accuracy}});
  }
  write_text(directory / "sweep.csv", csv.str());
  write_text(directory / "sweep.json", j.dump(2) + "\n");
}

}  // namespace dnnens
