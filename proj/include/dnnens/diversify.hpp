#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace dnnens {

struct Segment {
  std::size_t begin = 0;  // positions into ResamplePlan::permutation
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

/// One shuffled permutation of the training indices cut into n contiguous,
/// disjoint segments. Learner j has segment j deleted from its training set.
///
/// With a single learner there is nothing to diversify against: its segment
/// is empty and it trains on the full training set.
struct ResamplePlan {
  std::size_t n_learners = 0;
  std::vector<std::size_t> permutation;
  std::vector<Segment> segments;
  std::uint64_t seed = 0;

  std::size_t train_size() const noexcept { return permutation.size(); }
};

struct LearnerTrainingSet {
  std::size_t learner_id = 0;
  std::vector<std::size_t> kept_indices;
  // Drawn uniformly with replacement from kept_indices.
  std::vector<std::size_t> replenished_indices;

  std::size_t size() const noexcept {
    return kept_indices.size() + replenished_indices.size();
  }
  // kept followed by replenished.
  std::vector<std::size_t> all_indices() const;
};

/// Throws ConfigError unless train_size >= 2 * n_learners and n_learners >= 1.
/// Segment sizes are floor(N/n) with the N mod n remainder given one each to
/// the first segments.
ResamplePlan build_plan(std::size_t train_size, std::size_t n_learners,
                        std::uint64_t seed);

// Pure in (plan, learner_id); the replenishment RNG is seeded from
// derive_seed(plan.seed, learner_id).
LearnerTrainingSet materialize(const ResamplePlan& plan, std::size_t learner_id);

// The deleted segment of the learner, in permutation order.
std::vector<std::size_t> out_of_bag(const ResamplePlan& plan, std::size_t learner_id);

void write_plan_manifest(const ResamplePlan& plan, const std::filesystem::path& path);
ResamplePlan read_plan_manifest(const std::filesystem::path& path);

}  // namespace dnnens
