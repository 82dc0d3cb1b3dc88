#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace CLI {
class App;
}

namespace subgp::cli {

/// Every tunable of a pipeline run. Values are layered: built-in defaults,
/// then the JSON config file, then command-line flags.
struct RunConfig {
  std::string workspace = "workspace";
  std::string input;
  double holdout = 0.2;
  double clip_sigma = std::numeric_limits<double>::infinity();
  double max_reject_rate = 0.01;

  std::size_t n_min = 50;
  std::size_t n_max = 150;
  std::string grid = "auto";
  std::string mode = "balanced";  // balanced | equal-volume

  double eta = 0.5;
  std::size_t n_m = 50;
  int gp_starts = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = all hardware threads
  bool trace = false;

  std::string variance = "noisy";     // noisy | latent
  std::string units = "standardized";  // standardized | raw
  std::size_t density_grid = 0;        // points per query; 0 disables

  std::string synth_preset = "two-branch";  // two-branch | noise
  std::size_t synth_n = 20000;
  std::size_t synth_dim = 1;
  double synth_noise = 0.1;

  /// Checks the cross-field invariants; throws ConfigError.
  void validate() const;
  /// Parsed grid: empty for "auto".
  std::vector<std::size_t> grid_counts() const;

  nlohmann::ordered_json to_json() const;
};

/// Applies the keys of a config object onto cfg. Unknown keys and values of
/// the wrong type raise ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

/// Registers every RunConfig flag on a CLI11 app and, after parsing, layers
/// defaults < config file < flags into a final RunConfig.
class ConfigLayers {
 public:
  explicit ConfigLayers(CLI::App& app);

  /// Call after CLI11 parsing.
  RunConfig resolve() const;

  const std::string& config_path() const { return config_path_; }

 private:
  struct Binding {
    std::function<std::size_t()> given;
    std::function<void(const RunConfig&, RunConfig&)> copy;
  };
  template <typename T>
  void bind(CLI::App& app, const std::string& flag, T RunConfig::*field, const std::string& help);

  RunConfig flags_;
  std::string config_path_;
  std::vector<Binding> bindings_;
};

}  // namespace subgp::cli
