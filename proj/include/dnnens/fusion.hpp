#pragma once

#include "dnnens/boosted_trees.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dnnens {

/// Class probabilities of n learners over S samples: one S x C matrix per
/// learner.
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  // Throws ContractError on inconsistent shapes or invalid probability rows.
  explicit PredictionMatrix(std::vector<Eigen::MatrixXd> per_learner,
                            std::vector<std::size_t> learner_ids = {},
                            std::vector<std::size_t> sample_ids = {});

  std::size_t n_learners() const noexcept { return per_learner_.size(); }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  const Eigen::MatrixXd& learner(std::size_t j) const { return per_learner_.at(j); }
  double operator()(std::size_t j, std::size_t s, std::size_t c) const {
    return per_learner_[j](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
  }
  const std::vector<std::size_t>& learner_ids() const noexcept { return learner_ids_; }
  const std::vector<std::size_t>& sample_ids() const noexcept { return sample_ids_; }

  // Argmax label of every learner on every sample: [learner][sample].
  std::vector<std::vector<int>> votes() const;

  // First n learners only (ensemble-size sweeps).
  PredictionMatrix prefix(std::size_t n) const;

 private:
  std::vector<Eigen::MatrixXd> per_learner_;
  std::vector<std::size_t> learner_ids_;
  std::vector<std::size_t> sample_ids_;
  std::size_t n_samples_ = 0;
  std::size_t n_classes_ = 0;
};

// Per-sample counts fre[y_k] of learners voting for each class.
struct VoteTally {
  Eigen::MatrixXi counts;  // samples x classes
  std::size_t n_learners = 0;

  int top_count(std::size_t sample) const;
  // Most voted class, lowest index on ties.
  int top_label(std::size_t sample) const;
};

VoteTally tally_votes(const PredictionMatrix& pm);

enum class WeightSource { uniform, accuracy, inverse_variance };

struct WeightVector {
  Eigen::VectorXd values;  // non-negative, sums to 1
  WeightSource source = WeightSource::uniform;
};

WeightVector uniform_weights(std::size_t n_learners);

/// w_j = acc_j / sum(acc). Throws DegenerateWeightsError when all are zero
/// and ContractError for accuracies outside [0, 1].
WeightVector weights_from_accuracy(std::span<const double> accuracies);

/// w_j proportional to 1 / max(var_j, 1e-12).
WeightVector weights_from_inverse_variance(std::span<const double> variances);

/// Mean over samples of the squared distance between the probability row and
/// the one-hot target. The learner "variance" behind inverse-variance weights.
double probability_error_variance(const Eigen::MatrixXd& probabilities,
                                  std::span<const int> labels);

inline constexpr int kRejected = -1;

enum class Route { direct, confident_vote, meta_learner, fallback };

std::string_view route_name(Route route);

struct FusionOutcome {
  std::vector<int> decisions;  // class index or kRejected
  std::vector<Route> routes;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return decisions.size(); }
  std::size_t rejected_count() const;
  std::size_t route_count(Route route) const;
  // Rejected samples count as errors.
  double accuracy(std::span<const int> labels) const;
};

// argmax_c sum_j w_j p_j[c]; lowest index on ties.
FusionOutcome model_average(const PredictionMatrix& pm, const WeightVector& weights);
FusionOutcome model_average(const PredictionMatrix& pm);

// Class = argmax(fre[y_k]); lowest index on ties.
FusionOutcome plurality_vote(const PredictionMatrix& pm);

// Class with strictly more than n/2 votes, otherwise kRejected.
FusionOutcome majority_vote(const PredictionMatrix& pm);

enum class Level1Mode { probabilities, hard_labels };

/// S x (n*C) stacked features, learner-major: column j*C + c holds
/// p_j[., c] (or the one-hot of learner j's vote in hard-label mode).
Eigen::MatrixXd build_level1_features(const PredictionMatrix& pm,
                                      Level1Mode mode = Level1Mode::probabilities);
Eigen::MatrixXd build_level1_features(const PredictionMatrix& pm,
                                      std::span<const std::size_t> samples,
                                      Level1Mode mode = Level1Mode::probabilities);

BoostedModel fit_meta(const PredictionMatrix& pm_train, std::span<const int> train_labels,
                      const BoostConfig& config,
                      Level1Mode mode = Level1Mode::probabilities);
FusionOutcome meta_fuse(const BoostedModel& model, const PredictionMatrix& pm_test,
                        Level1Mode mode = Level1Mode::probabilities);

struct FilteredFusion {
  FusionOutcome outcome;
  std::optional<BoostedModel> meta;  // empty when the fallback was taken
  std::size_t difficult_train_count = 0;
  std::size_t threshold = 0;
};

/// Pre-filtering by vote count followed by a stacked meta-learner.
///
/// Training instances whose top vote count reaches `threshold` are dropped;
/// the meta-learner is fitted on the level-1 features of the rest. At test
/// time a sample whose top count reaches `threshold` keeps its voted label,
/// every other sample is decided by the meta-learner. When the difficult
/// training set is empty or single-class, the residual test samples fall
/// back to plurality voting and a warning is recorded.
///
/// Throws ConfigError unless 1 <= threshold <= n_learners.
FilteredFusion filtered_fuse(const PredictionMatrix& pm_train,
                             std::span<const int> train_labels,
                             const PredictionMatrix& pm_test, std::size_t threshold,
                             const BoostConfig& config,
                             Level1Mode mode = Level1Mode::probabilities);

// Applies an already fitted filtered fusion to new predictions.
FusionOutcome apply_filtered(const FilteredFusion& fitted, const PredictionMatrix& pm_test,
                             Level1Mode mode = Level1Mode::probabilities);

struct VarianceReport {
  double learner_variance = 0.0;   // mean over learners of Var(m_j)
  double ensemble_variance = 0.0;  // Var(mean_j m_j)
  double ratio = 0.0;              // ensemble / learner; 1 if learners are constant
  std::size_t n_learners = 0;
};

/// `outputs` holds one draw per row and one learner per column.
/// Throws InsufficientDataError for fewer than 2 rows.
VarianceReport variance_report(const Eigen::MatrixXd& outputs);

// Per-class variances averaged over classes.
VarianceReport variance_report(const PredictionMatrix& pm);

}  // namespace dnnens
