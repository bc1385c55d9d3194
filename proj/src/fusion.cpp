#include "dnnens/fusion.hpp"

#include "dnnens/errors.hpp"
#include "dnnens/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnnens {

namespace {

constexpr double kProbabilityTolerance = 1e-9;
constexpr double kVarianceFloor = 1e-12;

FusionOutcome direct_outcome(std::vector<int> decisions) {
  FusionOutcome out;
  out.routes.assign(decisions.size(), Route::direct);
  out.decisions = std::move(decisions);
  return out;
}

void check_same_shape(const PredictionMatrix& a, const PredictionMatrix& b) {
  if (a.n_learners() != b.n_learners() || a.n_classes() != b.n_classes())
    throw ContractError("fusion: train and test prediction matrices disagree in shape");
}

}  // namespace

PredictionMatrix::PredictionMatrix(std::vector<Eigen::MatrixXd> per_learner,
                                   std::vector<std::size_t> learner_ids,
                                   std::vector<std::size_t> sample_ids)
    : per_learner_(std::move(per_learner)),
      learner_ids_(std::move(learner_ids)),
      sample_ids_(std::move(sample_ids)) {
  if (per_learner_.empty()) throw ContractError("prediction matrix: no learners");
  n_samples_ = static_cast<std::size_t>(per_learner_.front().rows());
  n_classes_ = static_cast<std::size_t>(per_learner_.front().cols());
  if (n_classes_ < 1) throw ContractError("prediction matrix: no classes");
  for (const auto& m : per_learner_) {
    if (static_cast<std::size_t>(m.rows()) != n_samples_ ||
        static_cast<std::size_t>(m.cols()) != n_classes_)
      throw ContractError("prediction matrix: learners disagree in shape");
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      if (!row.allFinite() || row.minCoeff() < 0.0 ||
          std::abs(row.sum() - 1.0) > kProbabilityTolerance)
        throw ContractError("prediction matrix: row " + std::to_string(r) +
                            " is not a probability vector");
    }
  }
  if (learner_ids_.empty()) {
    learner_ids_.resize(per_learner_.size());
    std::iota(learner_ids_.begin(), learner_ids_.end(), std::size_t{0});
  }
  if (sample_ids_.empty()) {
    sample_ids_.resize(n_samples_);
    std::iota(sample_ids_.begin(), sample_ids_.end(), std::size_t{0});
  }
  if (learner_ids_.size() != per_learner_.size() || sample_ids_.size() != n_samples_)
    throw ContractError("prediction matrix: id lists have the wrong length");
}

std::vector<std::vector<int>> PredictionMatrix::votes() const {
  std::vector<std::vector<int>> out;
  out.reserve(per_learner_.size());
  for (const auto& m : per_learner_) out.push_back(predict_labels(m));
  return out;
}

PredictionMatrix PredictionMatrix::prefix(std::size_t n) const {
  if (n < 1 || n > per_learner_.size())
    throw ContractError("prediction matrix: prefix size out of range");
  return PredictionMatrix({per_learner_.begin(), per_learner_.begin() + static_cast<long>(n)},
                          {learner_ids_.begin(), learner_ids_.begin() + static_cast<long>(n)},
                          sample_ids_);
}

int VoteTally::top_count(std::size_t sample) const {
  return counts.row(static_cast<Eigen::Index>(sample)).maxCoeff();
}

int VoteTally::top_label(std::size_t sample) const {
  return static_cast<int>(argmax(counts.row(static_cast<Eigen::Index>(sample))));
}

VoteTally tally_votes(const PredictionMatrix& pm) {
  VoteTally tally;
  tally.n_learners = pm.n_learners();
  tally.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(pm.n_samples()),
                                       static_cast<Eigen::Index>(pm.n_classes()));
  for (const auto& learner_votes : pm.votes())
    for (std::size_t s = 0; s < learner_votes.size(); ++s)
      ++tally.counts(static_cast<Eigen::Index>(s), learner_votes[s]);
  return tally;
}

WeightVector uniform_weights(std::size_t n_learners) {
  if (n_learners == 0) throw ContractError("weights: no learners");
  return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_learners),
                                    1.0 / static_cast<double>(n_learners)),
          WeightSource::uniform};
}

WeightVector weights_from_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw ContractError("weights: no learners");
  double total = 0.0;
  for (double a : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) throw ContractError("weights: accuracy outside [0, 1]");
    total += a;
  }
  if (total == 0.0) throw DegenerateWeightsError("weights: every accuracy is zero");
  WeightVector w;
  w.source = WeightSource::accuracy;
  w.values.resize(static_cast<Eigen::Index>(accuracies.size()));
  for (std::size_t j = 0; j < accuracies.size(); ++j)
    w.values(static_cast<Eigen::Index>(j)) = accuracies[j] / total;
  return w;
}

WeightVector weights_from_inverse_variance(std::span<const double> variances) {
  if (variances.empty()) throw ContractError("weights: no learners");
  WeightVector w;
  w.source = WeightSource::inverse_variance;
  w.values.resize(static_cast<Eigen::Index>(variances.size()));
  for (std::size_t j = 0; j < variances.size(); ++j) {
    if (std::isnan(variances[j])) throw ContractError("weights: variance is NaN");
    w.values(static_cast<Eigen::Index>(j)) = 1.0 / std::max(variances[j], kVarianceFloor);
  }
  w.values /= w.values.sum();
  return w;
}

double probability_error_variance(const Eigen::MatrixXd& probabilities,
                                  std::span<const int> labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
    throw ContractError("variance: rows and labels differ in length");
  if (labels.empty()) throw InsufficientDataError("variance: no samples");
  double total = 0.0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    Eigen::RowVectorXd diff = probabilities.row(r);
    diff(labels[static_cast<std::size_t>(r)]) -= 1.0;
    total += diff.squaredNorm();
  }
  return total / static_cast<double>(labels.size());
}

std::string_view route_name(Route route) {
  switch (route) {
    case Route::direct: return "direct";
    case Route::confident_vote: return "confident-vote";
    case Route::meta_learner: return "meta-learner";
    case Route::fallback: return "fallback";
  }
  return "unknown";
}

std::size_t FusionOutcome::rejected_count() const {
  return static_cast<std::size_t>(std::count(decisions.begin(), decisions.end(), kRejected));
}

std::size_t FusionOutcome::route_count(Route route) const {
  return static_cast<std::size_t>(std::count(routes.begin(), routes.end(), route));
}

double FusionOutcome::accuracy(std::span<const int> labels) const {
  if (labels.size() != decisions.size())
    throw ContractError("fusion: decisions and labels differ in length");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += decisions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

FusionOutcome model_average(const PredictionMatrix& pm, const WeightVector& weights) {
  if (static_cast<std::size_t>(weights.values.size()) != pm.n_learners())
    throw ContractError("model_average: weight vector length differs from learner count");
  Eigen::MatrixXd combined = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pm.n_samples()),
                                                   static_cast<Eigen::Index>(pm.n_classes()));
  for (std::size_t j = 0; j < pm.n_learners(); ++j)
    combined += weights.values(static_cast<Eigen::Index>(j)) * pm.learner(j);
  return direct_outcome(predict_labels(combined));
}

FusionOutcome model_average(const PredictionMatrix& pm) {
  return model_average(pm, uniform_weights(pm.n_learners()));
}

FusionOutcome plurality_vote(const PredictionMatrix& pm) {
  const VoteTally tally = tally_votes(pm);
  std::vector<int> decisions(pm.n_samples());
  for (std::size_t s = 0; s < decisions.size(); ++s) decisions[s] = tally.top_label(s);
  return direct_outcome(std::move(decisions));
}

FusionOutcome majority_vote(const PredictionMatrix& pm) {
  const VoteTally tally = tally_votes(pm);
  std::vector<int> decisions(pm.n_samples());
  for (std::size_t s = 0; s < decisions.size(); ++s) {
    // count > n/2  <=>  2 * count > n
    decisions[s] = 2 * static_cast<std::size_t>(tally.top_count(s)) > pm.n_learners()
                       ? tally.top_label(s)
                       : kRejected;
  }
  return direct_outcome(std::move(decisions));
}

Eigen::MatrixXd build_level1_features(const PredictionMatrix& pm,
                                      std::span<const std::size_t> samples,
                                      Level1Mode mode) {
  const auto classes = static_cast<Eigen::Index>(pm.n_classes());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(samples.size()),
      static_cast<Eigen::Index>(pm.n_learners()) * classes);
  for (std::size_t j = 0; j < pm.n_learners(); ++j) {
    const auto& m = pm.learner(j);
    const auto offset = static_cast<Eigen::Index>(j) * classes;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i] >= pm.n_samples()) throw ContractError("level-1: sample out of range");
      const auto row = m.row(static_cast<Eigen::Index>(samples[i]));
      const auto r = static_cast<Eigen::Index>(i);
      if (mode == Level1Mode::probabilities)
        out.row(r).segment(offset, classes) = row;
      else
        out(r, offset + argmax(row)) = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd build_level1_features(const PredictionMatrix& pm, Level1Mode mode) {
  std::vector<std::size_t> all(pm.n_samples());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return build_level1_features(pm, all, mode);
}

BoostedModel fit_meta(const PredictionMatrix& pm_train, std::span<const int> train_labels,
                      const BoostConfig& config, Level1Mode mode) {
  if (train_labels.size() != pm_train.n_samples())
    throw ContractError("fit_meta: labels and predictions differ in length");
  return fit_boosted(build_level1_features(pm_train, mode), train_labels,
                     pm_train.n_classes(), config);
}

FusionOutcome meta_fuse(const BoostedModel& model, const PredictionMatrix& pm_test,
                        Level1Mode mode) {
  FusionOutcome out;
  out.decisions = predict_labels(model, build_level1_features(pm_test, mode));
  out.routes.assign(out.decisions.size(), Route::meta_learner);
  return out;
}

FilteredFusion filtered_fuse(const PredictionMatrix& pm_train,
                             std::span<const int> train_labels,
                             const PredictionMatrix& pm_test, std::size_t threshold,
                             const BoostConfig& config, Level1Mode mode) {
  if (threshold < 1 || threshold > pm_train.n_learners())
    throw ConfigError("filtered fusion: threshold " + std::to_string(threshold) +
                      " must lie in [1, " + std::to_string(pm_train.n_learners()) + "]");
  if (train_labels.size() != pm_train.n_samples())
    throw ContractError("filtered fusion: labels and predictions differ in length");
  check_same_shape(pm_train, pm_test);

  FilteredFusion fitted;
  fitted.threshold = threshold;

  const VoteTally tally = tally_votes(pm_train);
  std::vector<std::size_t> difficult;
  for (std::size_t s = 0; s < pm_train.n_samples(); ++s)
    if (static_cast<std::size_t>(tally.top_count(s)) < threshold) difficult.push_back(s);
  fitted.difficult_train_count = difficult.size();

  std::vector<int> difficult_labels;
  for (std::size_t s : difficult) difficult_labels.push_back(train_labels[s]);
  const bool multi_class =
      std::adjacent_find(difficult_labels.begin(), difficult_labels.end(),
                         std::not_equal_to<>()) != difficult_labels.end();

  std::string warning;
  if (difficult.empty()) {
    warning = "no difficult training instances; residual test samples use plurality voting";
  } else if (!multi_class || difficult.size() < 2) {
    warning = "difficult training instances are single-class; residual test samples use "
              "plurality voting";
  } else {
    fitted.meta = fit_boosted(build_level1_features(pm_train, difficult, mode),
                              difficult_labels, pm_train.n_classes(), config);
  }

  fitted.outcome = apply_filtered(fitted, pm_test, mode);
  if (!warning.empty()) fitted.outcome.warnings.push_back(warning);
  return fitted;
}

FusionOutcome apply_filtered(const FilteredFusion& fitted, const PredictionMatrix& pm_test,
                             Level1Mode mode) {
  if (fitted.threshold < 1 || fitted.threshold > pm_test.n_learners())
    throw ConfigError("filtered fusion: threshold out of range for this ensemble");
  const VoteTally tally = tally_votes(pm_test);
  FusionOutcome out;
  out.decisions.resize(pm_test.n_samples());
  out.routes.resize(pm_test.n_samples());

  std::vector<std::size_t> residual;
  for (std::size_t s = 0; s < pm_test.n_samples(); ++s) {
    if (static_cast<std::size_t>(tally.top_count(s)) >= fitted.threshold) {
      out.decisions[s] = tally.top_label(s);
      out.routes[s] = Route::confident_vote;
    } else {
      residual.push_back(s);
    }
  }
  if (residual.empty()) return out;

  if (fitted.meta) {
    const auto labels =
        predict_labels(*fitted.meta, build_level1_features(pm_test, residual, mode));
    for (std::size_t i = 0; i < residual.size(); ++i) {
      out.decisions[residual[i]] = labels[i];
      out.routes[residual[i]] = Route::meta_learner;
    }
  } else {
    for (std::size_t s : residual) {
      out.decisions[s] = tally.top_label(s);
      out.routes[s] = Route::fallback;
    }
  }
  return out;
}

VarianceReport variance_report(const Eigen::MatrixXd& outputs) {
  if (outputs.rows() < 2) throw InsufficientDataError("variance report: need at least 2 draws");
  if (outputs.cols() < 1) throw ContractError("variance report: no learners");
  const auto draws = static_cast<double>(outputs.rows());
  auto column_variance = [&](const Eigen::VectorXd& v) {
    return (v.array() - v.mean()).square().sum() / (draws - 1.0);
  };
  VarianceReport report;
  report.n_learners = static_cast<std::size_t>(outputs.cols());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < outputs.cols(); ++j) sum += column_variance(outputs.col(j));
  report.learner_variance = sum / static_cast<double>(outputs.cols());
  report.ensemble_variance = column_variance(outputs.rowwise().mean());
  report.ratio = report.learner_variance > 0.0
                     ? report.ensemble_variance / report.learner_variance
                     : 1.0;
  return report;
}

VarianceReport variance_report(const PredictionMatrix& pm) {
  if (pm.n_samples() < 2) throw InsufficientDataError("variance report: need at least 2 samples");
  VarianceReport total;
  total.n_learners = pm.n_learners();
  const auto samples = static_cast<Eigen::Index>(pm.n_samples());
  for (std::size_t c = 0; c < pm.n_classes(); ++c) {
    Eigen::MatrixXd outputs(samples, static_cast<Eigen::Index>(pm.n_learners()));
    for (std::size_t j = 0; j < pm.n_learners(); ++j)
      outputs.col(static_cast<Eigen::Index>(j)) = pm.learner(j).col(static_cast<Eigen::Index>(c));
    const VarianceReport per_class = variance_report(outputs);
    total.learner_variance += per_class.learner_variance;
    total.ensemble_variance += per_class.ensemble_variance;
  }
  const auto classes = static_cast<double>(pm.n_classes());
  total.learner_variance /= classes;
  total.ensemble_variance /= classes;
  total.ratio = total.learner_variance > 0.0 ? total.ensemble_variance / total.learner_variance
                                             : 1.0;
  return total;
}

}  // namespace dnnens
