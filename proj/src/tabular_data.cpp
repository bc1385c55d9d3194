#include "dnnens/tabular_data.hpp"

#include "dnnens/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dnnens {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delimiter)) cells.push_back(cell);
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    s = s.substr(1, s.size() - 2);
  return s;
}

std::string at_line(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

void DatasetSchema::validate() const {
  if (n_features < 1) throw ConfigError("schema: need at least one feature");
  if (n_classes < 2) throw ConfigError("schema: need at least two classes");
  if (class_names.size() != n_classes)
    throw ConfigError("schema: class_names size differs from n_classes");
  std::set<std::string> unique(class_names.begin(), class_names.end());
  if (unique.size() != class_names.size())
    throw ConfigError("schema: class names are not unique");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.schema = schema;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels[i] = labels[rows[i]];
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DataError("dataset: feature rows and labels differ in length");
  if (!features.allFinite()) throw DataError("dataset: non-finite feature value");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= schema.n_classes)
      throw DataError("dataset: label index out of range");
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> header;
  std::size_t arity = 0;
  std::size_t label_col = 0;
  bool label_resolved = false;

  auto resolve_label = [&](std::size_t line_no) {
    if (!options.label_name.empty()) {
      auto it = std::find(header.begin(), header.end(), options.label_name);
      if (it == header.end())
        throw DataError(at_line(path, line_no) + "label column '" +
                        options.label_name + "' not in header");
      label_col = static_cast<std::size_t>(it - header.begin());
    } else {
      long idx = options.label_index.value_or(-1);
      if (idx < 0) idx += static_cast<long>(arity);
      if (idx < 0 || idx >= static_cast<long>(arity))
        throw DataError(at_line(path, line_no) + "label column index out of range");
      label_col = static_cast<std::size_t>(idx);
    }
    if (arity < 2)
      throw DataError(at_line(path, line_no) + "need a label and at least one feature");
    label_resolved = true;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line, options.delimiter);
    for (auto& c : cells) c = trim(c);

    if (arity == 0) {
      arity = cells.size();
      if (options.has_header) {
        header = cells;
        resolve_label(line_no);
        continue;
      }
      if (!options.label_name.empty())
        throw DataError(at_line(path, line_no) +
                        "label column given by name but file has no header");
      resolve_label(line_no);
    }
    if (cells.size() != arity)
      throw DataError(at_line(path, line_no) + "expected " + std::to_string(arity) +
                      " cells, found " + std::to_string(cells.size()));

    std::vector<double> values;
    values.reserve(arity - 1);
    for (std::size_t c = 0; c < arity; ++c) {
      if (c == label_col) continue;
      double v = 0;
      if (!parse_double(cells[c], v) || !std::isfinite(v))
        throw DataError(at_line(path, line_no) + "non-numeric feature cell '" +
                        cells[c] + "' in column " + std::to_string(c + 1));
      values.push_back(v);
    }
    if (cells[label_col].empty())
      throw DataError(at_line(path, line_no) + "empty label");
    rows.push_back(std::move(values));
    raw_labels.push_back(cells[label_col]);
    line_numbers.push_back(line_no);
  }
  if (!label_resolved || rows.empty())
    throw DataError("dataset file '" + path.string() + "' has no data rows");

  Dataset ds;
  ds.schema.n_features = arity - 1;
  ds.schema.label_column = options.has_header ? header[label_col]
                                              : std::to_string(label_col);
  for (std::size_t c = 0; c < arity; ++c) {
    if (c == label_col) continue;
    ds.schema.feature_names.push_back(options.has_header ? header[c]
                                                         : "f" + std::to_string(c));
  }

  std::unordered_map<std::string, int> codes;
  for (std::size_t i = 0; i < options.known_classes.size(); ++i)
    codes.emplace(options.known_classes[i], static_cast<int>(i));
  ds.schema.class_names = options.known_classes;

  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(arity - 1));
  ds.labels.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    auto it = codes.find(raw_labels[r]);
    if (it == codes.end()) {
      if (!options.known_classes.empty())
        throw DataError(at_line(path, line_numbers[r]) + "unseen label '" +
                        raw_labels[r] + "'");
      it = codes.emplace(raw_labels[r], static_cast<int>(ds.schema.class_names.size())).first;
      ds.schema.class_names.push_back(raw_labels[r]);
    }
    ds.labels[r] = it->second;
  }
  ds.schema.n_classes = ds.schema.class_names.size();
  return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& name : dataset.schema.feature_names) out << name << delimiter;
  out << (dataset.schema.label_column.empty() ? "label" : dataset.schema.label_column)
      << '\n';
  for (Eigen::Index r = 0; r < dataset.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < dataset.features.cols(); ++c)
      out << dataset.features(r, c) << delimiter;
    out << dataset.schema.class_names[static_cast<std::size_t>(
               dataset.labels[static_cast<std::size_t>(r)])]
        << '\n';
  }
}

SplitIndices split_indices(std::span<const int> labels, std::size_t n_classes,
                           const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("split: train_fraction must lie strictly inside (0, 1)");
  const std::size_t total = labels.size();
  if (total < 2) throw ConfigError("split: need at least two samples");

  std::mt19937_64 rng(spec.seed);
  SplitIndices out;

  auto clamp_quota = [](double q, std::size_t n) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(q), 1, n - 1);
  };
  const auto target =
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(total)));

  if (!spec.stratified) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_train = clamp_quota(static_cast<double>(target), total);
    out.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
    out.test.assign(order.begin() + static_cast<long>(n_train), order.end());
  } else {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < total; ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes)
        throw ContractError("split: label out of range");
      by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    // Largest-remainder apportionment of the global train target.
    std::vector<std::size_t> quota(n_classes, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      const std::size_t n = by_class[c].size();
      if (n == 0) continue;
      if (n < 2)
        throw ConfigError("split: class " + std::to_string(c) +
                          " has a single sample; stratification needs at least 2");
      double exact = spec.train_fraction * static_cast<double>(n);
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k, ++assigned)
      ++quota[remainders[k].second];

    for (std::size_t c = 0; c < n_classes; ++c) {
      auto& members = by_class[c];
      if (members.empty()) continue;
      std::shuffle(members.begin(), members.end(), rng);
      std::size_t n_train = clamp_quota(static_cast<double>(quota[c]), members.size());
      out.train.insert(out.train.end(), members.begin(),
                       members.begin() + static_cast<long>(n_train));
      out.test.insert(out.test.end(), members.begin() + static_cast<long>(n_train),
                      members.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  auto idx = split_indices(dataset.labels, dataset.schema.n_classes, spec);
  return {dataset.subset(idx.train), dataset.subset(idx.test)};
}

NormalizerState fit_normalizer(const Dataset& train) {
  if (train.features.rows() == 0) throw DataError("normalizer: empty training set");
  NormalizerState state;
  const auto n = static_cast<double>(train.features.rows());
  state.mean = train.features.colwise().mean().transpose();
  state.stddev =
      ((train.features.rowwise() - state.mean.transpose()).array().square().colwise().sum() / n)
          .sqrt()
          .transpose();
  state.stddev = state.stddev.cwiseMax(NormalizerState::kStdFloor);
  return state;
}

void apply_normalizer_inplace(const NormalizerState& state, Eigen::MatrixXd& features) {
  if (features.cols() != state.mean.size())
    throw ContractError("normalizer: feature count mismatch");
  features = ((features.rowwise() - state.mean.transpose()).array().rowwise() /
              state.stddev.transpose().array())
                 .matrix();
}

Dataset apply_normalizer(const NormalizerState& state, const Dataset& dataset) {
  Dataset out = dataset;
  apply_normalizer_inplace(state, out.features);
  return out;
}

}  // namespace dnnens
