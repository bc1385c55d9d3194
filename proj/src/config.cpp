#include "dnnens/config.hpp"

#include "dnnens/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

namespace dnnens {

namespace {

namespace pt = boost::property_tree;

std::string strip(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string> comma_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (auto s = strip(item); !s.empty()) out.push_back(s);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto s = strip(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = strip(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

char parse_delimiter(const std::string& key, const std::string& text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "space") return ' ';
  if (text == "comma") return ',';
  if (text == "semicolon") return ';';
  if (text.size() == 1) return text[0];
  throw ConfigError(key + ": delimiter must be a single character");
}

const char* weight_source_name(WeightSource w) {
  switch (w) {
    case WeightSource::uniform: return "uniform";
    case WeightSource::accuracy: return "accuracy";
    case WeightSource::inverse_variance: return "inverse_variance";
  }
  return "unknown";
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::average: return "average";
    case Strategy::weighted_average: return "weighted_average";
    case Strategy::plurality: return "plurality";
    case Strategy::majority: return "majority";
    case Strategy::meta: return "meta";
    case Strategy::proposed: return "proposed";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (strategy_name(s) == name) return s;
  throw ConfigError("fusion.strategies: unknown strategy '" + std::string(name) + "'");
}

std::size_t ExperimentConfig::effective_threshold() const {
  return threshold.value_or(std::max<std::size_t>(1, n_learners - 1));
}

bool ExperimentConfig::runs(Strategy s) const {
  return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
}

void ExperimentConfig::validate() const {
  if (dataset_path.empty() && train_path.empty() && test_path.empty())
    throw ConfigError(
        "data.path: no dataset path given (set data.path, or data.train_path and "
        "data.test_path)");
  if (!dataset_path.empty() && (!train_path.empty() || !test_path.empty()))
    throw ConfigError("data.path: give either data.path or a predefined train/test pair");
  if (dataset_path.empty() && (train_path.empty() || test_path.empty()))
    throw ConfigError(train_path.empty() ? "data.train_path: missing"
                                         : "data.test_path: missing");
  if (n_learners < 1) throw ConfigError("n_learners: must be >= 1");
  if (hidden_sizes.empty()) throw ConfigError("mlp.hidden: need at least one hidden layer");
  if (std::find(hidden_sizes.begin(), hidden_sizes.end(), 0u) != hidden_sizes.end())
    throw ConfigError("mlp.hidden: layer sizes must be positive");
  if (mlp.epochs < 1) throw ConfigError("mlp.epochs: must be >= 1");
  if (mlp.batch_size < 1) throw ConfigError("mlp.batch_size: must be >= 1");
  if (!(mlp.learning_rate > 0.0)) throw ConfigError("mlp.learning_rate: must be positive");
  if (!(mlp.momentum >= 0.0 && mlp.momentum < 1.0))
    throw ConfigError("mlp.momentum: must lie in [0, 1)");
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
    throw ConfigError("split.train_fraction: must lie strictly inside (0, 1)");
  boost.validate();
  if (strategies.empty()) throw ConfigError("fusion.strategies: empty");
  const std::size_t t = effective_threshold();
  if (t < 1 || t > n_learners)
    throw ConfigError("fusion.threshold: " + std::to_string(t) + " must lie in [1, " +
                      std::to_string(n_learners) + "]");
  if (level1_source == Level1Source::cross_fit && cross_fit_folds < 2)
    throw ConfigError("fusion.cross_fit_folds: must be >= 2");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path q(strip(p));
    return q.is_relative() ? base / q : q;
  };

  ExperimentConfig cfg;
  cfg.mlp.layer_sizes.clear();

  using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);
  static const std::map<std::string, Setter> setters = {
      {"name", [](auto& c, auto&, auto& v) { c.dataset_name = strip(v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = parse_number<std::size_t>(k, v); }},
      {"n_learners",
       [](auto& c, auto& k, auto& v) { c.n_learners = parse_number<std::size_t>(k, v); }},
      {"data.label", [](auto& c, auto&, auto& v) { c.csv.label_name = strip(v); }},
      {"data.label_index",
       [](auto& c, auto& k, auto& v) { c.csv.label_index = parse_number<long>(k, v); }},
      {"data.delimiter",
       [](auto& c, auto& k, auto& v) { c.csv.delimiter = parse_delimiter(k, v); }},
      {"data.header", [](auto& c, auto& k, auto& v) { c.csv.has_header = parse_bool(k, v); }},
      {"split.train_fraction",
       [](auto& c, auto& k, auto& v) { c.split.train_fraction = parse_number<double>(k, v); }},
      {"split.stratified",
       [](auto& c, auto& k, auto& v) { c.split.stratified = parse_bool(k, v); }},
      {"mlp.hidden",
       [](auto& c, auto& k, auto& v) {
         c.hidden_sizes.clear();
         for (const auto& item : comma_list(v))
           c.hidden_sizes.push_back(parse_number<std::size_t>(k, item));
       }},
      {"mlp.epochs",
       [](auto& c, auto& k, auto& v) { c.mlp.epochs = parse_number<std::size_t>(k, v); }},
      {"mlp.batch_size",
       [](auto& c, auto& k, auto& v) { c.mlp.batch_size = parse_number<std::size_t>(k, v); }},
      {"mlp.learning_rate",
       [](auto& c, auto& k, auto& v) { c.mlp.learning_rate = parse_number<double>(k, v); }},
      {"mlp.momentum",
       [](auto& c, auto& k, auto& v) { c.mlp.momentum = parse_number<double>(k, v); }},
      {"boost.rounds",
       [](auto& c, auto& k, auto& v) { c.boost.rounds = parse_number<std::size_t>(k, v); }},
      {"boost.max_depth",
       [](auto& c, auto& k, auto& v) { c.boost.max_depth = parse_number<std::size_t>(k, v); }},
      {"boost.learning_rate",
       [](auto& c, auto& k, auto& v) { c.boost.learning_rate = parse_number<double>(k, v); }},
      {"boost.l2_lambda",
       [](auto& c, auto& k, auto& v) { c.boost.l2_lambda = parse_number<double>(k, v); }},
      {"boost.min_child_weight",
       [](auto& c, auto& k, auto& v) { c.boost.min_child_weight = parse_number<double>(k, v); }},
      {"fusion.strategies",
       [](auto& c, auto&, auto& v) {
         c.strategies.clear();
         for (const auto& item : comma_list(v)) c.strategies.push_back(parse_strategy(item));
       }},
      {"fusion.weights",
       [](auto& c, auto& k, auto& v) {
         const auto s = strip(v);
         if (s == "accuracy") c.weight_source = WeightSource::accuracy;
         else if (s == "inverse_variance") c.weight_source = WeightSource::inverse_variance;
         else if (s == "uniform") c.weight_source = WeightSource::uniform;
         else throw ConfigError(k + ": expected accuracy, inverse_variance or uniform");
       }},
      {"fusion.threshold",
       [](auto& c, auto& k, auto& v) { c.threshold = parse_number<std::size_t>(k, v); }},
      {"fusion.level1",
       [](auto& c, auto& k, auto& v) {
         const auto s = strip(v);
         if (s == "probabilities") c.level1 = Level1Mode::probabilities;
         else if (s == "hard_labels") c.level1 = Level1Mode::hard_labels;
         else throw ConfigError(k + ": expected probabilities or hard_labels");
       }},
      {"fusion.level1_source",
       [](auto& c, auto& k, auto& v) {
         const auto s = strip(v);
         if (s == "in_sample") c.level1_source = Level1Source::in_sample;
         else if (s == "cross_fit") c.level1_source = Level1Source::cross_fit;
         else throw ConfigError(k + ": expected in_sample or cross_fit");
       }},
      {"fusion.cross_fit_folds",
       [](auto& c, auto& k, auto& v) { c.cross_fit_folds = parse_number<std::size_t>(k, v); }},
  };

  auto apply = [&](const std::string& key, const std::string& value) {
    if (key == "output") cfg.output_dir = resolve(value);
    else if (key == "data.path") cfg.dataset_path = resolve(value);
    else if (key == "data.train_path") cfg.train_path = resolve(value);
    else if (key == "data.test_path") cfg.test_path = resolve(value);
    else if (auto it = setters.find(key); it != setters.end()) it->second(cfg, key, value);
    else throw ConfigError("config: unknown key '" + key + "'");
  };

  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply(name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) apply(name + "." + key, leaf.data());
  }
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.dataset_name;
  j["seed"] = c.seed;
  j["n_learners"] = c.n_learners;
  j["data"] = {{"path", c.dataset_path.string()},
               {"train_path", c.train_path.string()},
               {"test_path", c.test_path.string()},
               {"label", c.csv.label_name},
               {"label_index", c.csv.label_index ? nlohmann::json(*c.csv.label_index)
                                                 : nlohmann::json(nullptr)},
               {"delimiter", std::string(1, c.csv.delimiter)},
               {"header", c.csv.has_header}};
  j["split"] = {{"train_fraction", c.split.train_fraction},
                {"stratified", c.split.stratified},
                {"predefined", c.predefined_split()}};
  j["mlp"] = {{"hidden", c.hidden_sizes},
              {"activation", "relu"},
              {"loss", "softmax_cross_entropy"},
              {"init", "he_uniform"},
              {"epochs", c.mlp.epochs},
              {"batch_size", c.mlp.batch_size},
              {"learning_rate", c.mlp.learning_rate},
              {"momentum", c.mlp.momentum}};
  j["boost"] = {{"rounds", c.boost.rounds},
                {"max_depth", c.boost.max_depth},
                {"learning_rate", c.boost.learning_rate},
                {"l2_lambda", c.boost.l2_lambda},
                {"min_child_weight", c.boost.min_child_weight}};
  auto& names = j["fusion"]["strategies"] = nlohmann::json::array();
  for (Strategy s : c.strategies) names.push_back(std::string(strategy_name(s)));
  j["fusion"]["weights"] = weight_source_name(c.weight_source);
  j["fusion"]["threshold"] = c.effective_threshold();
  j["fusion"]["level1"] =
      c.level1 == Level1Mode::probabilities ? "probabilities" : "hard_labels";
  j["fusion"]["level1_source"] =
      c.level1_source == Level1Source::in_sample ? "in_sample" : "cross_fit";
  if (c.level1_source == Level1Source::cross_fit)
    j["fusion"]["cross_fit_folds"] = c.cross_fit_folds;
  return j;
}

}  // namespace dnnens
