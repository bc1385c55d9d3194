#pragma once

#include "dnnens/boosted_trees.hpp"
#include "dnnens/fusion.hpp"
#include "dnnens/neural_net.hpp"
#include "dnnens/tabular_data.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnnens {

// Where the meta-learners' level-1 training predictions come from.
enum class Level1Source { in_sample, cross_fit };

enum class Strategy { average, weighted_average, plurality, majority, meta, proposed };

inline constexpr Strategy kAllStrategies[] = {Strategy::average,  Strategy::weighted_average,
                                              Strategy::plurality, Strategy::majority,
                                              Strategy::meta,     Strategy::proposed};

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct ExperimentConfig {
  std::string dataset_name;
  // Either dataset_path (split by `split`) or both train_path and test_path.
  std::filesystem::path dataset_path;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  CsvOptions csv;
  SplitSpec split;  // split.seed is derived from `seed`

  std::size_t n_learners = 7;
  std::vector<std::size_t> hidden_sizes = {1200, 800};
  MlpConfig mlp;  // hyperparameters; layer_sizes and seed are set per learner
  BoostConfig boost;

  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  WeightSource weight_source = WeightSource::accuracy;
  std::optional<std::size_t> threshold;  // default n_learners - 1 (at least 1)
  Level1Mode level1 = Level1Mode::probabilities;
  Level1Source level1_source = Level1Source::cross_fit;
  std::size_t cross_fit_folds = 5;

  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::size_t threads = 1;

  std::size_t effective_threshold() const;
  bool runs(Strategy s) const;
  bool predefined_split() const { return !train_path.empty(); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reads an INI-style file: top-level keys (name, seed, output, threads,
/// n_learners) followed by [data], [split], [mlp], [boost] and [fusion]
/// sections. Relative paths resolve against the file's directory. Unknown
/// keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace dnnens
