#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subgp/catalog.hpp"
#include "subgp/partition.hpp"
#include "subgp/random.hpp"

namespace subgp {

struct SamplerConfig {
  /// Kernel width in standardized-y units.
  double eta = 0.5;
  std::uint64_t seed = 0;
};

/// Deterministic part of a draw: the order in which cells are visited and,
/// for each step, the cells visited earlier that neighbor it. Depends only on
/// the partitioning, the graph and the responses, so it is shared by every
/// ensemble member.
struct VisitPlan {
  std::vector<std::size_t> order;                   // permutation of cell indices
  std::vector<std::vector<std::size_t>> conditioning;  // per step: earlier visited neighbors
  std::vector<bool> component_start;                // step seeds a new connected component
  std::vector<double> variance;                     // per cell, sample variance of y
};

struct DrawStep {
  std::size_t step;
  std::size_t cell;
  std::size_t chosen_index;
  std::vector<std::size_t> neighbor_cells;
  double weight_entropy;  // nats
};

struct SubsampleDraw {
  std::vector<std::size_t> chosen;  // per cell: catalog index of the drawn point
  std::vector<std::size_t> visit_order;
  std::vector<DrawStep> trace;      // filled only when requested
};

/// Sample variance (n-1 denominator) of y over each cell's members.
/// Throws ConfigError if a cell has fewer than two members.
std::vector<double> cell_variances(const Catalog& cat, const Partitioning& part);

/// Cell of maximal variance among `allowed` (all cells when empty); ties go
/// to the lowest index.
std::size_t select_start(std::span<const double> variance, const std::vector<bool>* allowed = nullptr);

/// Maximum-variance unvisited neighbor of the visited set, or nullopt when
/// the frontier is empty.
std::optional<std::size_t> next_cell(const std::vector<bool>& visited, std::span<const double> variance,
                                     const PartitionGraph& graph);

/// Full visit order: variance-ordered frontier walk, restarted in each
/// connected component.
VisitPlan plan_visits(const Catalog& cat, const Partitioning& part, const PartitionGraph& graph);

/// Normalized log-probabilities of drawing each member given the responses
/// already drawn in neighboring cells. Empty neighbor_draws gives uniform.
std::vector<double> conditional_log_weights(std::span<const double> member_y,
                                            std::span<const double> neighbor_draws, double eta);

/// Draws a position into member_y with probability proportional to
/// prod_k exp(-(y_j - y*_k)^2 / (2 eta^2)).
std::size_t conditional_draw(std::span<const double> member_y, std::span<const double> neighbor_draws,
                             double eta, Rng& rng);

/// One representative point per cell, drawn along the plan.
SubsampleDraw draw_subsample(const Catalog& cat, const Partitioning& part, const VisitPlan& plan,
                             const SamplerConfig& cfg, bool record_trace = false);

SubsampleDraw draw_subsample(const Catalog& cat, const Partitioning& part,
                             const PartitionGraph& graph, const SamplerConfig& cfg,
                             bool record_trace = false);

}  // namespace subgp
