#include "dnnens/neural_net.hpp"

#include "binary_io.hpp"

namespace dnnens {

namespace {
constexpr std::string_view kMlpMagic{"DNNEMLP\0", 8};
constexpr std::uint32_t kMlpVersion = 1;
}  // namespace

void MlpConfig::validate() const {
  if (layer_sizes.size() < 3)
    throw ConfigError("mlp: need input, output and at least one hidden layer");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw ConfigError("mlp: layer sizes must be positive");
  if (layer_sizes.back() < 2) throw ConfigError("mlp: need at least two output classes");
  if (epochs < 1) throw ConfigError("mlp: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("mlp: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("mlp: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("mlp: momentum must lie in [0, 1)");
}

MlpConfig MlpConfig::for_data(std::size_t n_features, std::size_t n_classes,
                              std::vector<std::size_t> hidden) {
  MlpConfig cfg;
  cfg.layer_sizes.push_back(n_features);
  cfg.layer_sizes.insert(cfg.layer_sizes.end(), hidden.begin(), hidden.end());
  cfg.layer_sizes.push_back(n_classes);
  return cfg;
}

void save_mlp(const MlpModel& model, const std::filesystem::path& path) {
  io::BinaryWriter out(path);
  out.magic(kMlpMagic);
  out.u32(kMlpVersion);

  const MlpConfig& cfg = model.config;
  out.u64(cfg.layer_sizes.size());
  for (std::size_t s : cfg.layer_sizes) out.u64(s);
  out.u32(static_cast<std::uint32_t>(cfg.hidden_activation));
  out.u64(cfg.epochs);
  out.u64(cfg.batch_size);
  out.f64(cfg.learning_rate);
  out.f64(cfg.momentum);
  out.u64(cfg.seed);

  out.f64(model.trace.initial_loss);
  out.u64(model.trace.epoch_loss.size());
  out.f64s(model.trace.epoch_loss.data(), model.trace.epoch_loss.size());

  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    const auto& w = model.weights[l];
    out.u64(static_cast<std::uint64_t>(w.rows()));
    out.u64(static_cast<std::uint64_t>(w.cols()));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = w;
    out.f64s(row_major.data(), static_cast<std::size_t>(row_major.size()));
    out.f64s(model.biases[l].data(), static_cast<std::size_t>(model.biases[l].size()));
  }
  out.finish();
}

MlpModel load_mlp(const std::filesystem::path& path) {
  io::BinaryReader in(path);
  in.expect_magic(kMlpMagic, "mlp model");
  if (const auto version = in.u32(); version != kMlpVersion)
    throw FormatError("mlp model '" + path.string() + "' has unsupported version " +
                      std::to_string(version));

  MlpModel model;
  MlpConfig& cfg = model.config;
  cfg.layer_sizes.resize(in.count(sizeof(std::uint64_t)));
  for (auto& s : cfg.layer_sizes) s = in.u64();
  const auto activation = in.u32();
  if (activation != static_cast<std::uint32_t>(Activation::relu))
    throw FormatError("mlp model: unknown activation code");
  cfg.hidden_activation = Activation::relu;
  cfg.epochs = in.u64();
  cfg.batch_size = in.u64();
  cfg.learning_rate = in.f64();
  cfg.momentum = in.f64();
  cfg.seed = in.u64();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError("mlp model '" + path.string() + "': " + e.what());
  }

  model.trace.initial_loss = in.f64();
  model.trace.epoch_loss.resize(in.count(sizeof(double)));
  in.f64s(model.trace.epoch_loss.data(), model.trace.epoch_loss.size());

  for (std::size_t l = 0; l + 1 < cfg.layer_sizes.size(); ++l) {
    const auto rows = in.u64();
    const auto cols = in.u64();
    if (rows != cfg.layer_sizes[l + 1] || cols != cfg.layer_sizes[l])
      throw FormatError("mlp model: layer shape disagrees with config");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(
        static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.f64s(w.data(), static_cast<std::size_t>(w.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    in.f64s(b.data(), static_cast<std::size_t>(b.size()));
    model.weights.emplace_back(w);
    model.biases.push_back(std::move(b));
  }
  in.expect_end();
  return model;
}

}  // namespace dnnens
