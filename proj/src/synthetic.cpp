#include "dnnens/synthetic.hpp"

#include "dnnens/errors.hpp"

#include <cmath>
#include <random>

namespace dnnens {

Dataset make_gaussian_classes(std::size_t n_samples, std::size_t n_features,
                              std::size_t n_classes, double separation,
                              std::uint64_t seed) {
  if (n_classes < 2 || n_features < 1 || n_samples < n_classes)
    throw ConfigError("synthetic: need >= 2 classes, >= 1 feature, >= 1 sample per class");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto f = static_cast<Eigen::Index>(n_features);
  Eigen::MatrixXd means(static_cast<Eigen::Index>(n_classes), f);
  const double scale = separation / std::sqrt(static_cast<double>(n_features));
  for (Eigen::Index c = 0; c < means.rows(); ++c)
    for (Eigen::Index k = 0; k < f; ++k) means(c, k) = scale * normal(rng);

  Dataset ds;
  ds.schema.n_features = n_features;
  ds.schema.n_classes = n_classes;
  ds.schema.label_column = "label";
  for (std::size_t k = 0; k < n_features; ++k)
    ds.schema.feature_names.push_back("x" + std::to_string(k));
  for (std::size_t c = 0; c < n_classes; ++c)
    ds.schema.class_names.push_back("class_" + std::to_string(c));

  ds.features.resize(static_cast<Eigen::Index>(n_samples), f);
  ds.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto c = static_cast<Eigen::Index>(i % n_classes);
    ds.labels[i] = static_cast<int>(c);
    for (Eigen::Index k = 0; k < f; ++k)
      ds.features(static_cast<Eigen::Index>(i), k) = means(c, k) + normal(rng);
  }
  return ds;
}

}  // namespace dnnens
