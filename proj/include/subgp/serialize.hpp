#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "subgp/catalog.hpp"
#include "subgp/ensemble.hpp"
#include "subgp/gp.hpp"
#include "subgp/partition.hpp"
#include "subgp/sampler.hpp"

namespace subgp {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically enough for a single writer: temp file then rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);

Json to_json(const NormalizationState& s);
NormalizationState normalization_from_json(const Json& j);

/// CSV with header x1..xd,y; values written with round-trip precision.
void write_catalog_csv(std::ostream& out, const Catalog& cat);
/// Reads x1..xd[,y]. A missing y column leaves y filled with NaN.
Catalog read_catalog_csv(std::istream& in, const NormalizationState& transform);

/// {cells:[{id, lower, upper, member_count, oversize_flag}], edges, n_min, n_max, mode}
Json to_json(const Partitioning& part, const PartitionGraph& graph, std::string_view mode);
/// cell_id,index rows.
void write_members_csv(std::ostream& out, const Partitioning& part);
/// Rebuilds a partitioning from its JSON dump and membership table.
Partitioning partitioning_from_files(const Json& j, std::istream& members);

/// {phi, sigma2, X_train, y_train}
Json to_json(const GPModel& model);
GPModel gp_from_json(const Json& j);

/// One JSON object per line: {step, cell_id, chosen_index, neighbor_ids, weight_entropy}.
std::string trace_jsonl(const SubsampleDraw& draw);

/// Writes member_XXX.json files and manifest.json (config snapshot, seeds,
/// per-member content hashes, creation timestamp).
void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& model, const Json& config);

struct LoadedEnsemble {
  std::vector<GPModel> members;
  Json manifest;
};

/// Throws ConfigError when the directory or manifest is missing and
/// DataError when a member file does not match its recorded hash.
LoadedEnsemble load_ensemble(const std::filesystem::path& dir);

}  // namespace subgp
