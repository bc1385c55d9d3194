#pragma once

#include "dnnens/config.hpp"
#include "dnnens/diversify.hpp"
#include "dnnens/fusion.hpp"
#include "dnnens/tabular_data.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dnnens {

// Seeds of every random stream of a run, all derived from the master seed.
struct RunSeeds {
  std::uint64_t split = 0;
  std::uint64_t plan = 0;
  std::uint64_t meta = 0;
  std::vector<std::uint64_t> learners;

  static RunSeeds derive(std::uint64_t master, std::size_t n_learners);
};

struct PreparedData {
  Dataset train;  // normalized
  Dataset test;   // normalized with training statistics
  NormalizerState normalizer;
  std::vector<std::size_t> test_sample_ids;  // row ids in the source file(s)
};

// load -> split (or predefined pair) -> normalize.
PreparedData prepare_data(const ExperimentConfig& config);

struct RouteCounts {
  std::size_t confident = 0;
  std::size_t meta = 0;
  std::size_t fallback = 0;
};

struct RunReport {
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::size_t n_learners = 0;
  std::size_t n_classes = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::string> class_names;

  std::vector<double> learner_accuracy;      // test set
  std::vector<double> learner_oob_accuracy;  // deleted segment
  std::vector<double> learner_oob_variance;
  std::vector<double> learner_final_loss;
  double mean_accuracy = 0.0;
  std::vector<double> weights;  // weighted_average strategy

  std::map<std::string, double> strategy_accuracy;
  std::size_t rejected_count = 0;  // majority strategy
  RouteCounts routes;              // proposed strategy
  std::size_t threshold = 0;
  std::size_t difficult_train_count = 0;
  VarianceReport variance;  // over the test-set predictions
  std::vector<std::string> warnings;
  nlohmann::json config;

  std::map<std::string, double> timings_ms;

  std::vector<std::size_t> test_sample_ids;
  std::vector<int> test_labels;
  std::map<std::string, FusionOutcome> outcomes;
};

/// End-to-end experiment: load, split, normalize, resample, train the n
/// learners (concurrently when config.threads > 1), predict on the full train
/// and test sets, then run every configured fusion strategy. When
/// config.output_dir is set, the plan and all models are written under
/// `models/` before fusion starts.
///
/// Module errors propagate with the failing stage prefixed to the message.
RunReport run_experiment(const ExperimentConfig& config);

struct SweepRow {
  std::size_t size = 0;
  double proposed_accuracy = 0.0;
  double mean_individual_accuracy = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  nlohmann::json config;
};

// run_experiment for ensemble sizes 1..max_size; with an output directory,
// size k is written to `sweep/size_<k>/`.
SweepReport sweep(const ExperimentConfig& config, std::size_t max_size = 8);

/// Writes report.json, timings.json, report.txt, accuracy_table.csv,
/// decisions.csv, decisions.json and manifest.json into `directory`.
void emit_report(const RunReport& report, const std::filesystem::path& directory);
void emit_sweep(const SweepReport& report, const std::filesystem::path& directory);

nlohmann::json report_to_json(const RunReport& report);
// Numeric and descriptive fields from report.json (+ timings.json if present).
RunReport read_report(const std::filesystem::path& directory);

}  // namespace dnnens
