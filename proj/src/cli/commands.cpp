#include "subgp/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "subgp/csv.hpp"
#include "subgp/ensemble.hpp"
#include "subgp/error.hpp"
#include "subgp/evaluate.hpp"
#include "subgp/ingest.hpp"
#include "subgp/parallel.hpp"
#include "subgp/partition.hpp"
#include "subgp/serialize.hpp"

namespace subgp::cli {

namespace fs = std::filesystem;
using csv::format_double;

namespace {

constexpr double kReportedLevel = 0.9;
const std::vector<double> kCoverageLevels{0.5, 0.68, 0.8, 0.9, 0.95};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ifstream open_input(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + what + ": " + path.string());
  return in;
}

NormalizationState load_normalization(const Workspace& ws) {
  const auto j = Json::parse(read_text_file(ws.normalization_json()), nullptr, false);
  if (j.is_discarded() || !j.contains("transform")) {
    throw ConfigError("malformed " + ws.normalization_json().string());
  }
  return normalization_from_json(j["transform"]);
}

Catalog load_catalog(const fs::path& path, const NormalizationState& state, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path.string());
  auto in = open_input(path, what);
  return read_catalog_csv(in, state);
}

void write_catalog(const fs::path& path, const Catalog& cat) {
  std::ostringstream ss;
  write_catalog_csv(ss, cat);
  write_text_file(path, ss.str());
}

VarianceMode variance_mode(const RunConfig& cfg) {
  return cfg.variance == "latent" ? VarianceMode::Latent : VarianceMode::Noisy;
}

void write_split(const Workspace& ws, const Catalog& train, const Catalog& test,
                 const NormalizationState& state, Json extra) {
  write_catalog(ws.train_csv(), train);
  write_catalog(ws.test_csv(), test);
  Json j{{"transform", to_json(state)}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_text_file(ws.normalization_json(), j.dump(2) + "\n");
}

Partitioning load_partition(const Workspace& ws, std::size_t n_points) {
  const fs::path pj = ws.partition_dir() / "partition.json";
  if (!fs::exists(pj)) throw ConfigError("partition not found: run 'subgp partition' first");
  const auto j = Json::parse(read_text_file(pj), nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed " + pj.string());
  if (j.value("mode", "") != "balanced") {
    throw ConfigError("training needs a balanced partition; rerun 'subgp partition --mode balanced'");
  }
  auto in = open_input(ws.partition_dir() / "members.csv", "partition membership");
  Partitioning part = partitioning_from_files(j, in);
  std::size_t total = 0;
  for (const auto& c : part.cells) {
    for (auto i : c.members) {
      if (i >= n_points) throw ConfigError("partition refers to a row beyond the training catalog");
    }
    total += c.count();
  }
  if (total != n_points) {
    throw ConfigError("partition covers " + std::to_string(total) + " points, catalog has " +
                      std::to_string(n_points));
  }
  return part;
}

}  // namespace

void cmd_ingest(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("ingest needs --input <catalog.csv>");
  const Workspace ws{cfg.workspace};
  auto in = open_input(cfg.input, "input catalog");
  const RawCsv raw = read_raw_csv(in);
  const FeatureTable table = compute_features(raw.records);

  const std::size_t total = raw.records.size() + raw.parse_failures.size();
  const std::size_t rejected = raw.parse_failures.size() + table.rejected.size();
  for (const auto& r : raw.parse_failures) spdlog::warn("line {}: {}", r.index, r.reason);
  for (const auto& r : table.rejected) {
    spdlog::warn("line {}: {}", raw.line_numbers[r.index], r.reason);
  }
  const double rate = total == 0 ? 0.0 : static_cast<double>(rejected) / static_cast<double>(total);
  if (rate > cfg.max_reject_rate) {
    throw DataError("rejected " + std::to_string(rejected) + " of " + std::to_string(total) +
                    " rows, above the allowed rate " + format_double(cfg.max_reject_rate));
  }
  const std::size_t n = static_cast<std::size_t>(table.features.rows());
  if (n < 2) throw DataError("fewer than two valid rows in " + cfg.input);

  const HoldoutIndices split = holdout_indices(n, cfg.holdout, cfg.seed);
  auto [cat, state] = normalize(table.features, table.spec_z, split.train);
  Catalog train = clip_outliers(cat.subset(split.train), cfg.clip_sigma);
  const Catalog test = cat.subset(split.test);
  if (train.empty()) throw DataError("outlier clipping removed every training row");

  std::vector<std::size_t> train_lines;
  std::vector<std::size_t> test_lines;
  for (auto i : split.train) train_lines.push_back(raw.line_numbers[table.source_rows[i]]);
  for (auto i : split.test) test_lines.push_back(raw.line_numbers[table.source_rows[i]]);
  write_split(ws, train, test, state,
              Json{{"seed", cfg.seed},
                   {"holdout", cfg.holdout},
                   {"rejected_rows", rejected},
                   {"clipped_rows", split.train.size() - train.size()},
                   {"holdout_lines", {{"train", train_lines}, {"test", test_lines}}}});
  std::cout << "ingested " << n << " rows (" << rejected << " rejected): " << train.size()
            << " train, " << test.size() << " test\n";
}

void cmd_synth(const RunConfig& cfg) {
  const Workspace ws{cfg.workspace};
  SyntheticSpec spec = cfg.synth_preset == "noise"
                           ? pure_noise_spec(cfg.synth_n, cfg.seed, cfg.synth_dim)
                           : two_branch_spec(cfg.synth_n, cfg.seed, cfg.synth_noise, cfg.synth_dim);
  if (cfg.synth_preset == "noise") spec.noise_sd = cfg.synth_noise > 0 ? cfg.synth_noise : 1.0;
  const SyntheticData data = generate_synthetic(spec);
  const HoldoutIndices split = holdout_indices(cfg.synth_n, cfg.holdout, cfg.seed);
  const Catalog train = data.catalog.subset(split.train);
  const Catalog test = data.catalog.subset(split.test);
  write_split(ws, train, test, data.catalog.transform,
              Json{{"seed", cfg.seed},
                   {"holdout", cfg.holdout},
                   {"synthetic",
                    {{"preset", cfg.synth_preset}, {"n", cfg.synth_n}, {"dim", cfg.synth_dim},
                     {"noise_sd", spec.noise_sd}}}});
  std::ostringstream branches;
  branches << "split,row,branch\n";
  for (std::size_t k = 0; k < split.train.size(); ++k) {
    branches << "train," << k << ',' << data.branch[split.train[k]] << '\n';
  }
  for (std::size_t k = 0; k < split.test.size(); ++k) {
    branches << "test," << k << ',' << data.branch[split.test[k]] << '\n';
  }
  write_text_file(ws.catalog_dir() / "branches.csv", branches.str());
  std::cout << "generated " << cfg.synth_n << " synthetic rows (" << cfg.synth_preset << "): "
            << train.size() << " train, " << test.size() << " test\n";
}

void cmd_partition(const RunConfig& cfg) {
  const Workspace ws{cfg.workspace};
  const NormalizationState state = load_normalization(ws);
  const Catalog cat = load_catalog(cfg.input.empty() ? ws.train_csv() : fs::path(cfg.input), state,
                                   "training catalog");
  if (cat.empty()) throw DataError("training catalog is empty");
  const CardinalityBounds bounds{cfg.n_min, cfg.n_max};
  const auto grid = cfg.grid_counts();
  if (!grid.empty() && grid.size() != cat.dim()) {
    throw ConfigError("grid lists " + std::to_string(grid.size()) + " counts for " +
                      std::to_string(cat.dim()) + " dimensions");
  }

  const auto t0 = Clock::now();
  PartitionResult result;
  if (cfg.mode == "equal-volume") {
    const auto m = grid.empty() ? default_grid(cat.size(), cat.dim(), bounds) : grid;
    result.partitioning = equal_volume_partition(cat, m);
    result.partitioning.bounds = bounds;
    result.graph = build_graph(result.partitioning);
    result.summary = summarize(result.partitioning, &result.graph);
  } else {
    result = partition_pipeline(cat, bounds,
                                grid.empty() ? std::nullopt : std::optional<std::vector<std::size_t>>(grid));
  }
  const double elapsed = seconds_since(t0);

  write_text_file(ws.partition_dir() / "partition.json",
                  to_json(result.partitioning, result.graph, cfg.mode).dump() + "\n");
  std::ostringstream members;
  write_members_csv(members, result.partitioning);
  write_text_file(ws.partition_dir() / "members.csv", members.str());
  const auto& s = result.summary;
  const Json summary{{"mode", cfg.mode},
                     {"cell_count", s.cell_count},
                     {"nonempty_count", s.nonempty_count},
                     {"empty_count", s.empty_count},
                     {"oversize_count", s.oversize_count},
                     {"min_cardinality", s.min_cardinality},
                     {"mean_cardinality", s.mean_cardinality},
                     {"max_cardinality", s.max_cardinality},
                     {"edge_count", s.edge_count},
                     {"cardinality_hist", s.cardinality_hist},
                     {"log10_volume_range", {s.min_log10_volume, s.max_log10_volume}},
                     {"log10_volume_hist", s.log_volume_hist}};
  write_text_file(ws.partition_dir() / "summary.json", summary.dump(2) + "\n");

  std::cout << "cells: " << s.cell_count << " (" << s.nonempty_count << " nonempty, " << s.empty_count
            << " empty, " << s.oversize_count << " oversize)\n"
            << "cardinality min/mean/max: " << s.min_cardinality << " / " << s.mean_cardinality
            << " / " << s.max_cardinality << "\n"
            << "graph edges: " << s.edge_count << "\n"
            << "wall time: " << elapsed << " s\n";
}

void cmd_train(const RunConfig& cfg) {
  const Workspace ws{cfg.workspace};
  const NormalizationState state = load_normalization(ws);
  const Catalog cat = load_catalog(ws.train_csv(), state, "training catalog");
  const Partitioning part = load_partition(ws, cat.size());
  const PartitionGraph graph = build_graph(part);

  EnsembleOptions opts;
  opts.members = cfg.n_m;
  opts.sampler = {cfg.eta, cfg.seed};
  opts.gp.starts = cfg.gp_starts;
  opts.threads = cfg.threads;
  opts.record_traces = cfg.trace;

  const auto t0 = Clock::now();
  const EnsembleModel model = train_ensemble(cat, part, graph, opts);
  const double elapsed = seconds_since(t0);

  const fs::path dir = ws.ensemble_dir();
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("member_", 0) == 0 || name == "manifest.json") fs::remove(e.path());
    }
    fs::remove_all(dir / "traces");
  }
  Json config = cfg.to_json();
  config.erase("workspace");
  config.erase("input");
  config.erase("threads");
  save_ensemble(dir, model, config);
  if (cfg.trace) {
    for (std::size_t i = 0; i < model.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "member_%03zu.jsonl", i);
      write_text_file(dir / "traces" / name, trace_jsonl(model.draws[i]));
    }
  }
  std::cout << "trained " << model.size() << " members on " << part.size() << " cells each in "
            << elapsed << " s\n";
}

void cmd_predict(const RunConfig& cfg) {
  const Workspace ws{cfg.workspace};
  const LoadedEnsemble ens = load_ensemble(ws.ensemble_dir());
  const NormalizationState state = load_normalization(ws);
  const fs::path qpath = cfg.input.empty() ? ws.test_csv() : fs::path(cfg.input);
  auto in = open_input(qpath, "query file");

  // Header-only or empty files yield a header-only output.
  Catalog q;
  {
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (csv::trim(text.substr(0, text.find('\n'))).empty()) {
      q.X.resize(0, static_cast<Eigen::Index>(ens.members.front().dim()));
    } else {
      std::istringstream ss(text);
      q = read_catalog_csv(ss, state);
    }
  }
  const std::size_t d = ens.members.front().dim();
  if (q.size() > 0 && q.dim() != d) {
    throw ConfigError("query row " + std::to_string(q.source_rows.front()) + " has " +
                      std::to_string(q.dim()) + " inputs, model expects " + std::to_string(d));
  }
  if (q.size() == 0 && q.dim() != d) {
    throw ConfigError("query header has " + std::to_string(q.dim()) + " inputs, model expects " +
                      std::to_string(d));
  }

  const VarianceMode mode = variance_mode(cfg);
  const bool raw = cfg.units == "raw";
  auto out_y = [&](double v) { return raw ? state.inverse_y(v) : v; };

  std::vector<std::string> lines(q.size());
  std::vector<std::string> density(cfg.density_grid > 0 ? q.size() : 0);
  parallel_for(q.size(), cfg.threads, [&](std::size_t j) {
    const MixturePredictive mp = predictive(std::span<const GPModel>(ens.members), q.row(j), mode);
    const double yt = q.y(static_cast<Eigen::Index>(j));
    std::string hpd;
    for (const auto& iv : hpd_region(mp, kReportedLevel)) {
      if (!hpd.empty()) hpd += ';';
      hpd += format_double(out_y(iv.lo)) + ':' + format_double(out_y(iv.hi));
    }
    std::string line = std::to_string(j) + ',';
    line += std::isfinite(yt) ? format_double(out_y(yt)) : "";
    line += ',' + format_double(out_y(mixture_quantile(mp, 0.5)));
    line += ',' + format_double(out_y(mixture_quantile(mp, 0.05)));
    line += ',' + format_double(out_y(mixture_quantile(mp, 0.95)));
    line += ',' + hpd + ',';
    if (std::isfinite(yt)) line += format_double(mixture_cdf(mp, yt));
    lines[j] = std::move(line);
    if (cfg.density_grid > 0) {
      const DensityGrid g = density_grid(mp, std::max<std::size_t>(cfg.density_grid, 2));
      std::string block;
      for (std::size_t k = 0; k < g.y.size(); ++k) {
        block += std::to_string(j) + ',' + format_double(g.y[k]) + ',' + format_double(g.pdf[k]) + '\n';
      }
      density[j] = std::move(block);
    }
  });

  std::string out = "id,y_true,median,q05,q95,hpd_intervals,pit\n";
  for (const auto& l : lines) out += l + '\n';
  write_text_file(ws.predictions_dir() / "predictions.csv", out);
  if (cfg.density_grid > 0) {
    std::string dens = "id,y,pdf\n";
    for (const auto& b : density) dens += b;
    write_text_file(ws.predictions_dir() / "density.csv", dens);
  }
  std::cout << "predicted " << q.size() << " queries with " << ens.members.size() << " members\n";
}

void cmd_evaluate(const RunConfig& cfg) {
  const Workspace ws{cfg.workspace};
  const LoadedEnsemble ens = load_ensemble(ws.ensemble_dir());
  const NormalizationState state = load_normalization(ws);
  const Catalog test = load_catalog(cfg.input.empty() ? ws.test_csv() : fs::path(cfg.input), state,
                                    "test catalog");
  if (test.empty()) throw ConfigError("test catalog is empty");
  if (test.dim() != ens.members.front().dim()) {
    throw ConfigError("test catalog has " + std::to_string(test.dim()) + " inputs, model expects " +
                      std::to_string(ens.members.front().dim()));
  }
  for (std::size_t j = 0; j < test.size(); ++j) {
    if (!std::isfinite(test.y(static_cast<Eigen::Index>(j)))) {
      throw DataError("test row " + std::to_string(test.source_rows[j]) + " has no response");
    }
  }

  const VarianceMode mode = variance_mode(cfg);
  std::vector<MixturePredictive> preds(test.size());
  std::vector<std::size_t> modes(test.size());
  parallel_for(test.size(), cfg.threads, [&](std::size_t j) {
    preds[j] = predictive(std::span<const GPModel>(ens.members), test.row(j), mode);
    modes[j] = mode_count(preds[j]);
  });

  const PITResult p = pit(preds, test.y);
  Json cov = Json::object();
  for (double level : kCoverageLevels) cov[format_double(level)] = coverage(preds, test.y, level);

  const bool raw = cfg.units == "raw";
  double sq = 0.0;
  double ab = 0.0;
  std::ostringstream scatter;
  std::ostringstream pitcsv;
  scatter << "id,y_true,median,q05,q95\n";
  pitcsv << "id,pit\n";
  for (std::size_t j = 0; j < test.size(); ++j) {
    auto conv = [&](double v) { return raw ? state.inverse_y(v) : v; };
    const double yt = conv(test.y(static_cast<Eigen::Index>(j)));
    const double med = conv(mixture_quantile(preds[j], 0.5));
    sq += (med - yt) * (med - yt);
    ab += std::abs(med - yt);
    scatter << j << ',' << format_double(yt) << ',' << format_double(med) << ','
            << format_double(conv(mixture_quantile(preds[j], 0.05))) << ','
            << format_double(conv(mixture_quantile(preds[j], 0.95))) << '\n';
    pitcsv << j << ',' << format_double(p.values[j]) << '\n';
  }
  const auto n = static_cast<double>(test.size());
  std::vector<std::size_t> mode_hist(*std::max_element(modes.begin(), modes.end()) + 1, 0);
  for (auto m : modes) ++mode_hist[m];

  const Json diag{{"test_points", test.size()},
                  {"members", ens.members.size()},
                  {"variance", cfg.variance},
                  {"units", cfg.units},
                  {"pit_hist", p.histogram},
                  {"chi2", p.chi2},
                  {"p_value", p.p_value},
                  {"coverage_by_level", cov},
                  {"rmse_median", std::sqrt(sq / n)},
                  {"mae_median", ab / n},
                  {"mode_count_hist", mode_hist}};
  write_text_file(ws.diagnostics_dir() / "diagnostics.json", diag.dump(2) + "\n");
  write_text_file(ws.diagnostics_dir() / "pit.csv", pitcsv.str());
  write_text_file(ws.diagnostics_dir() / "scatter.csv", scatter.str());
  std::cout << "PIT chi2 = " << p.chi2 << " (p = " << p.p_value << "), coverage(0.9) = "
            << cov[format_double(0.9)].get<double>() << ", RMSE(median) = " << std::sqrt(sq / n)
            << "\n";
}

namespace {

void init_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("subgp");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  });
}

}  // namespace

int run(const std::vector<std::string>& args) {
  init_logging();
  CLI::App app{"Ensemble Gaussian-process regression on balanced partitions", "subgp"};
  app.fallthrough();
  app.require_subcommand(1);
  ConfigLayers layers(app);
  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  const std::vector<Command> commands{
      {"ingest", "Derive features, normalize and split a raw catalog", cmd_ingest},
      {"synth", "Generate a synthetic catalog with known ground truth", cmd_synth},
      {"partition", "Partition the training inputs into balanced cells", cmd_partition},
      {"train", "Train the GP ensemble on conditional subsamples", cmd_train},
      {"predict", "Mixture predictions for a query catalog", cmd_predict},
      {"evaluate", "Calibration and accuracy diagnostics on the test catalog", cmd_evaluate},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    app.exit(e);
    return 2;
  }
  try {
    const RunConfig cfg = layers.resolve();
    cfg.validate();
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) c.fn(cfg);
    }
    return 0;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

}  // namespace subgp::cli
