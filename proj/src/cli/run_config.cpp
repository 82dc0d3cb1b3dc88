#include "subgp/cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include <CLI11.hpp>

#include "subgp/csv.hpp"
#include "subgp/error.hpp"
#include "subgp/serialize.hpp"

namespace subgp::cli {

void RunConfig::validate() const {
  if (n_min < 1) throw ConfigError("n_min must be >= 1");
  if (n_max < 2 * n_min) {
    throw ConfigError("n_max (" + std::to_string(n_max) + ") must be at least 2 * n_min (" +
                      std::to_string(2 * n_min) + ")");
  }
  if (n_m < 1) throw ConfigError("ensemble size n_m must be >= 1");
  if (!(holdout > 0.0 && holdout < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0,1), got " + std::to_string(holdout));
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be a positive number");
  if (!(clip_sigma > 0.0)) throw ConfigError("clip_sigma must be positive");
  if (!(max_reject_rate >= 0.0 && max_reject_rate <= 1.0)) {
    throw ConfigError("max_reject_rate must lie in [0,1]");
  }
  if (gp_starts < 1) throw ConfigError("gp_starts must be >= 1");
  if (mode != "balanced" && mode != "equal-volume") {
    throw ConfigError("mode must be 'balanced' or 'equal-volume', got '" + mode + "'");
  }
  if (variance != "noisy" && variance != "latent") {
    throw ConfigError("variance must be 'noisy' or 'latent', got '" + variance + "'");
  }
  if (units != "standardized" && units != "raw") {
    throw ConfigError("units must be 'standardized' or 'raw', got '" + units + "'");
  }
  if (synth_preset != "two-branch" && synth_preset != "noise") {
    throw ConfigError("synth preset must be 'two-branch' or 'noise', got '" + synth_preset + "'");
  }
  if (synth_n < 2 || synth_dim < 1) throw ConfigError("synth needs n >= 2 and dim >= 1");
  if (!(synth_noise >= 0.0)) throw ConfigError("synth noise must be >= 0");
  grid_counts();
}

std::vector<std::size_t> RunConfig::grid_counts() const {
  std::vector<std::size_t> out;
  if (grid == "auto" || grid.empty()) return out;
  for (auto f : csv::split_fields(grid)) {
    double v;
    if (!csv::parse_double(f, v) || v < 1 || v != std::floor(v)) {
      throw ConfigError("grid must be 'auto' or comma-separated positive counts, got '" + grid + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j{{"workspace", workspace},
                           {"input", input},
                           {"holdout", holdout},
                           {"max_reject_rate", max_reject_rate},
                           {"n_min", n_min},
                           {"n_max", n_max},
                           {"grid", grid},
                           {"mode", mode},
                           {"eta", eta},
                           {"n_m", n_m},
                           {"gp_starts", gp_starts},
                           {"seed", seed},
                           {"threads", threads},
                           {"trace", trace},
                           {"variance", variance},
                           {"units", units},
                           {"density_grid", density_grid},
                           {"synth_preset", synth_preset},
                           {"synth_n", synth_n},
                           {"synth_dim", synth_dim},
                           {"synth_noise", synth_noise}};
  // JSON has no infinity; a disabled clip is written as null.
  j["clip_sigma"] = std::isfinite(clip_sigma) ? nlohmann::ordered_json(clip_sigma) : nullptr;
  return j;
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  static const std::vector<std::string> known{
      "workspace", "input",    "holdout",     "clip_sigma", "max_reject_rate", "n_min",
      "n_max",     "grid",     "mode",        "eta",        "n_m",             "gp_starts",
      "seed",      "threads",  "trace",       "variance",   "units",           "density_grid",
      "synth_preset", "synth_n", "synth_dim", "synth_noise"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  read_key(j, "workspace", cfg.workspace);
  read_key(j, "input", cfg.input);
  read_key(j, "holdout", cfg.holdout);
  if (j.contains("clip_sigma") && j["clip_sigma"].is_null()) {
    cfg.clip_sigma = std::numeric_limits<double>::infinity();
  } else {
    read_key(j, "clip_sigma", cfg.clip_sigma);
  }
  read_key(j, "max_reject_rate", cfg.max_reject_rate);
  read_key(j, "n_min", cfg.n_min);
  read_key(j, "n_max", cfg.n_max);
  if (j.contains("grid") && j["grid"].is_array()) {
    std::string g;
    for (const auto& v : j["grid"]) {
      if (!g.empty()) g += ',';
      g += std::to_string(v.get<std::size_t>());
    }
    cfg.grid = g;
  } else {
    read_key(j, "grid", cfg.grid);
  }
  read_key(j, "mode", cfg.mode);
  read_key(j, "eta", cfg.eta);
  read_key(j, "n_m", cfg.n_m);
  read_key(j, "gp_starts", cfg.gp_starts);
  read_key(j, "seed", cfg.seed);
  read_key(j, "threads", cfg.threads);
  read_key(j, "trace", cfg.trace);
  read_key(j, "variance", cfg.variance);
  read_key(j, "units", cfg.units);
  read_key(j, "density_grid", cfg.density_grid);
  read_key(j, "synth_preset", cfg.synth_preset);
  read_key(j, "synth_n", cfg.synth_n);
  read_key(j, "synth_dim", cfg.synth_dim);
  read_key(j, "synth_noise", cfg.synth_noise);
}

template <typename T>
void ConfigLayers::bind(CLI::App& app, const std::string& flag, T RunConfig::*field,
                        const std::string& help) {
  CLI::Option* opt = nullptr;
  if constexpr (std::is_same_v<T, bool>) {
    opt = app.add_flag(flag, flags_.*field, help);
  } else {
    opt = app.add_option(flag, flags_.*field, help);
  }
  bindings_.push_back({[opt] { return opt->count(); },
                       [field](const RunConfig& src, RunConfig& dst) { dst.*field = src.*field; }});
}

ConfigLayers::ConfigLayers(CLI::App& app) {
  app.add_option("--config", config_path_, "JSON config file (flags override its values)");
  bind(app, "--seed", &RunConfig::seed, "Base random seed");
  bind(app, "--threads", &RunConfig::threads, "Worker threads (0 = all cores)");
  bind(app, "--workspace", &RunConfig::workspace, "Workspace directory");
  bind(app, "--input", &RunConfig::input, "Input file for the subcommand");
  bind(app, "--holdout", &RunConfig::holdout, "Held-out test fraction");
  bind(app, "--clip-sigma", &RunConfig::clip_sigma, "Drop training rows with |y| above this");
  bind(app, "--max-reject-rate", &RunConfig::max_reject_rate, "Abort above this rejected-row rate");
  bind(app, "--n-min", &RunConfig::n_min, "Minimum cell cardinality");
  bind(app, "--n-max", &RunConfig::n_max, "Maximum cell cardinality");
  bind(app, "--grid", &RunConfig::grid, "Initial grid: auto or comma-separated counts");
  bind(app, "--mode", &RunConfig::mode, "Partitioning: balanced or equal-volume");
  bind(app, "--eta", &RunConfig::eta, "Conditional sampling kernel width");
  bind(app, "--n-m,--draws", &RunConfig::n_m, "Ensemble size");
  bind(app, "--gp-starts", &RunConfig::gp_starts, "Optimizer starting points per member");
  bind(app, "--trace", &RunConfig::trace, "Write per-member sampling traces");
  bind(app, "--variance", &RunConfig::variance, "Predictive variance: noisy or latent");
  bind(app, "--units", &RunConfig::units, "Output units: standardized or raw");
  bind(app, "--density-grid", &RunConfig::density_grid, "Density grid points per query (0 = off)");
  bind(app, "--preset", &RunConfig::synth_preset, "Synthetic generator: two-branch or noise");
  bind(app, "--n", &RunConfig::synth_n, "Synthetic sample size");
  bind(app, "--dim", &RunConfig::synth_dim, "Synthetic input dimension");
  bind(app, "--noise", &RunConfig::synth_noise, "Synthetic noise sd (raw units)");
}

RunConfig ConfigLayers::resolve() const {
  RunConfig cfg;
  if (!config_path_.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(config_path_));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse config file " + config_path_ + ": " + e.what());
    }
    apply_json(cfg, j);
  }
  for (const auto& b : bindings_) {
    if (b.given() > 0) b.copy(flags_, cfg);
  }
  return cfg;
}

}  // namespace subgp::cli
