#include "dnnens/diversify.hpp"

#include "dnnens/errors.hpp"
#include "dnnens/seed.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace dnnens {

namespace {
constexpr const char* kPlanFormat = "dnnens-resample-plan";
constexpr int kPlanVersion = 1;
}  // namespace

std::vector<std::size_t> LearnerTrainingSet::all_indices() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  out.insert(out.end(), kept_indices.begin(), kept_indices.end());
  out.insert(out.end(), replenished_indices.begin(), replenished_indices.end());
  return out;
}

ResamplePlan build_plan(std::size_t train_size, std::size_t n_learners,
                        std::uint64_t seed) {
  if (n_learners < 1) throw ConfigError("resample plan: n_learners must be >= 1");
  if (train_size < 2 * n_learners)
    throw ConfigError("resample plan: training set of " + std::to_string(train_size) +
                      " samples is too small for " + std::to_string(n_learners) +
                      " learners (need >= " + std::to_string(2 * n_learners) + ")");

  ResamplePlan plan;
  plan.n_learners = n_learners;
  plan.seed = seed;
  plan.permutation.resize(train_size);
  std::iota(plan.permutation.begin(), plan.permutation.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "permutation"));
  std::shuffle(plan.permutation.begin(), plan.permutation.end(), rng);

  if (n_learners == 1) {
    plan.segments.push_back({0, 0});
    return plan;
  }
  const std::size_t base = train_size / n_learners;
  const std::size_t extra = train_size % n_learners;
  std::size_t pos = 0;
  for (std::size_t j = 0; j < n_learners; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    plan.segments.push_back({pos, pos + len});
    pos += len;
  }
  return plan;
}

LearnerTrainingSet materialize(const ResamplePlan& plan, std::size_t learner_id) {
  if (learner_id >= plan.n_learners)
    throw ContractError("materialize: learner id out of range");
  const Segment seg = plan.segments[learner_id];

  LearnerTrainingSet set;
  set.learner_id = learner_id;
  set.kept_indices.reserve(plan.train_size() - seg.size());
  for (std::size_t p = 0; p < plan.train_size(); ++p)
    if (p < seg.begin || p >= seg.end) set.kept_indices.push_back(plan.permutation[p]);

  std::mt19937_64 rng(derive_seed(plan.seed, learner_id));
  std::uniform_int_distribution<std::size_t> pick(0, set.kept_indices.size() - 1);
  set.replenished_indices.reserve(seg.size());
  for (std::size_t k = 0; k < seg.size(); ++k)
    set.replenished_indices.push_back(set.kept_indices[pick(rng)]);
  return set;
}

std::vector<std::size_t> out_of_bag(const ResamplePlan& plan, std::size_t learner_id) {
  if (learner_id >= plan.n_learners)
    throw ContractError("out_of_bag: learner id out of range");
  const Segment seg = plan.segments[learner_id];
  return {plan.permutation.begin() + static_cast<long>(seg.begin),
          plan.permutation.begin() + static_cast<long>(seg.end)};
}

void write_plan_manifest(const ResamplePlan& plan, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kPlanFormat;
  j["version"] = kPlanVersion;
  j["seed"] = plan.seed;
  j["n_learners"] = plan.n_learners;
  j["train_size"] = plan.train_size();
  auto& bounds = j["segments"] = nlohmann::json::array();
  for (const auto& s : plan.segments) bounds.push_back({s.begin, s.end});
  j["permutation"] = plan.permutation;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write plan manifest '" + path.string() + "'");
  out << j.dump(1) << '\n';
}

ResamplePlan read_plan_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open plan manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("plan manifest: " + std::string(e.what()));
  }
  if (j.value("format", "") != kPlanFormat)
    throw FormatError("plan manifest: unrecognised format tag");
  if (j.value("version", 0) != kPlanVersion)
    throw FormatError("plan manifest: unsupported version");

  ResamplePlan plan;
  std::size_t declared_size = 0;
  try {
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.n_learners = j.at("n_learners").get<std::size_t>();
    plan.permutation = j.at("permutation").get<std::vector<std::size_t>>();
    for (const auto& b : j.at("segments"))
      plan.segments.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>()});
    declared_size = j.at("train_size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("plan manifest: " + std::string(e.what()));
  }

  const std::size_t n = plan.train_size();
  if (n != declared_size || plan.segments.size() != plan.n_learners)
    throw FormatError("plan manifest: inconsistent sizes");
  std::vector<bool> seen(n, false);
  for (std::size_t v : plan.permutation) {
    if (v >= n || seen[v]) throw FormatError("plan manifest: permutation is not a permutation");
    seen[v] = true;
  }
  std::size_t pos = 0;
  for (const auto& seg : plan.segments) {
    if (seg.begin != pos || seg.end < seg.begin || seg.end > n)
      throw FormatError("plan manifest: segments do not tile the permutation");
    pos = seg.end;
  }
  if (plan.n_learners > 1 && pos != n)
    throw FormatError("plan manifest: segments do not cover the training set");
  return plan;
}

}  // namespace dnnens
