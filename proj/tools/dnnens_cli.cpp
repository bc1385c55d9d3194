#include "dnnens/config.hpp"
#include "dnnens/errors.hpp"
#include "dnnens/harness.hpp"
#include "dnnens/selfcheck.hpp"
#include "dnnens/synthetic.hpp"
#include "dnnens/version.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kDivergence = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

dnnens::ExperimentConfig load(const CommonOptions& o) {
  dnnens::ExperimentConfig cfg = dnnens::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.threads) cfg.threads = *o.threads;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config) {
  if (needs_config)
    cmd->add_option("--config", o.config_path, "Experiment config (INI)")->required();
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Learners trained concurrently");
}

int run_command(const CommonOptions& o) {
  const dnnens::ExperimentConfig cfg = load(o);
  const dnnens::RunReport report = dnnens::run_experiment(cfg);
  if (!cfg.output_dir.empty()) {
    dnnens::emit_report(report, cfg.output_dir);
    std::ifstream summary(cfg.output_dir / "report.txt");
    std::cout << summary.rdbuf();
  } else {
    for (const auto& [name, acc] : report.strategy_accuracy)
      std::cout << name << ' ' << acc << '\n';
    std::cout << "mean_individual " << report.mean_accuracy << '\n';
  }
  return kOk;
}

int sweep_command(const CommonOptions& o, std::size_t max_size) {
  const dnnens::ExperimentConfig cfg = load(o);
  const dnnens::SweepReport report = dnnens::sweep(cfg, max_size);
  if (!cfg.output_dir.empty()) dnnens::emit_sweep(report, cfg.output_dir);
  std::cout << "size,proposed_accuracy,mean_individual_accuracy\n";
  for (const auto& row : report.rows)
    std::cout << row.size << ',' << row.proposed_accuracy << ','
              << row.mean_individual_accuracy << '\n';
  return kOk;
}

int selfcheck_command(const CommonOptions& o) {
  const auto results = dnnens::run_selfcheck(o.seed.value_or(2024));
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  [" << r.detail << "]\n";
    ok = ok && r.passed;
  }
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream out(std::filesystem::path(o.out) / "selfcheck.txt");
    for (const auto& r : results)
      out << (r.passed ? "PASS" : "FAIL") << '\t' << r.name << '\t' << r.detail << '\n';
  }
  return ok ? kOk : kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensembles of feed-forward networks with vote-filtered stacking"};
  app.set_version_flag("--version", dnnens::kVersion);
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, check_opts;
  auto* run = app.add_subcommand("run", "Train an ensemble and evaluate every fusion strategy");
  add_common(run, run_opts, true);

  std::size_t max_size = 8;
  auto* sweep = app.add_subcommand("sweep", "Evaluate ensemble sizes 1..K");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--max-size", max_size, "Largest ensemble size")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("selfcheck", "Run the fast invariant suite");
  add_common(check, check_opts, false);

  std::string synth_out;
  std::size_t synth_samples = 3000, synth_features = 20, synth_classes = 3;
  double synth_separation = 2.5;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian classification CSV");
  synth->add_option("--out", synth_out, "CSV path")->required();
  synth->add_option("--samples", synth_samples);
  synth->add_option("--features", synth_features);
  synth->add_option("--classes", synth_classes);
  synth->add_option("--separation", synth_separation);
  synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_command(run_opts);
    if (*sweep) return sweep_command(sweep_opts, max_size);
    if (*check) return selfcheck_command(check_opts);
    if (*synth) {
      const auto ds = dnnens::make_gaussian_classes(synth_samples, synth_features,
                                                    synth_classes, synth_separation, synth_seed);
      dnnens::write_csv(ds, synth_out);
      return kOk;
    }
  } catch (const dnnens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const dnnens::TrainingDivergence& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kDivergence;
  } catch (const dnnens::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const dnnens::FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
