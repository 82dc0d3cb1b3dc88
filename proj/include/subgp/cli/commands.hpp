#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "subgp/cli/run_config.hpp"

namespace subgp::cli {

/// Fixed layout under the workspace root.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path catalog_dir() const { return root / "catalog"; }
  std::filesystem::path partition_dir() const { return root / "partition"; }
  std::filesystem::path ensemble_dir() const { return root / "ensemble"; }
  std::filesystem::path predictions_dir() const { return root / "predictions"; }
  std::filesystem::path diagnostics_dir() const { return root / "diagnostics"; }

  std::filesystem::path train_csv() const { return catalog_dir() / "train.csv"; }
  std::filesystem::path test_csv() const { return catalog_dir() / "test.csv"; }
  std::filesystem::path normalization_json() const { return catalog_dir() / "normalization.json"; }
};

void cmd_ingest(const RunConfig& cfg);
void cmd_synth(const RunConfig& cfg);
void cmd_partition(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);

/// Parses arguments, dispatches the subcommand and maps errors onto exit
/// codes: 0 success, 2 configuration/validation, 3 data, 4 numerical.
int run(const std::vector<std::string>& args);

}  // namespace subgp::cli
