#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "subgp/catalog.hpp"

namespace subgp {

/// Axis-aligned box [lower, upper) in the unit cube. A side whose upper
/// bound equals 1 is closed, so every point of [0,1]^d belongs to exactly
/// one cell of a partitioning.
struct HyperRect {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> members;
  /// Set when a cell above the maximum cardinality cannot be split without
  /// violating the minimum (all coordinates tied).
  bool oversize = false;

  std::size_t dim() const { return lower.size(); }
  std::size_t count() const { return members.size(); }
  double volume() const;
  /// Longest side over shortest side.
  double aspect_ratio() const;
  bool contains_point(std::span<const double> x) const;
};

struct CardinalityBounds {
  std::size_t n_min = 1;
  std::size_t n_max = static_cast<std::size_t>(-1);
};

struct Partitioning {
  std::vector<HyperRect> cells;
  CardinalityBounds bounds;

  std::size_t size() const { return cells.size(); }
  std::size_t dim() const { return cells.empty() ? 0 : cells.front().dim(); }
  /// Cell owning each data index (size = number of points).
  std::vector<std::size_t> assignment(std::size_t n_points) const;
};

/// Undirected graph on cells; an edge joins two cells whose closures share
/// a face of positive (d-1)-dimensional extent. Corner contacts are not edges.
struct PartitionGraph {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
  std::vector<std::vector<std::size_t>> adjacency;         // sorted per node

  std::size_t node_count() const { return adjacency.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency[i]; }
};

/// Default per-dimension interval count: ceil((2N/(n_min+n_max))^(1/d)).
std::vector<std::size_t> default_grid(std::size_t n, std::size_t dim, CardinalityBounds bounds);

/// Interval boundaries 0 = b_0 < ... < b_m = 1 at the empirical quantiles
/// j/m of `values` (linear interpolation between order statistics).
/// Boundaries that coincide under heavy ties are dropped, so the result may
/// hold fewer than m intervals.
std::vector<double> quantile_boundaries(std::span<const double> values, std::size_t m);

/// Cartesian grid of quantile intervals; cells may be empty.
Partitioning initialize_grid(const Catalog& cat, std::span<const std::size_t> m_per_dim,
                             CardinalityBounds bounds = {});

/// Record of one merge, for auditing and tests.
struct MergeStep {
  std::size_t target;                 // working index of the cell being grown
  std::vector<std::size_t> absorbed;  // working indices merged into it
  std::size_t dimension;              // merge dimension (face neighbor's for fallback)
  bool upper;                         // direction along `dimension`
  bool fallback;                      // closure merge after every candidate was deferred
  std::size_t result;                 // working index of the merged cell
};

/// Grows every cell below bounds.n_min by merging it with a layer of
/// neighbors along the dimension and direction that absorbs the fewest
/// points while keeping the union a box. Working indices in `trace` refer to
/// an append-only list: the input cells first, each merged cell appended.
Partitioning merge_pass(Partitioning part, std::vector<MergeStep>* trace = nullptr);

/// Splits every cell above bounds.n_max at the member median along its
/// longest side (falling back to shorter sides) until none remain. Cells
/// that cannot be split are flagged oversize.
Partitioning split_pass(Partitioning part, const Catalog& cat);

PartitionGraph build_graph(const Partitioning& part);

struct PartitionSummary {
  std::size_t cell_count = 0;
  std::size_t nonempty_count = 0;
  std::size_t empty_count = 0;
  std::size_t oversize_count = 0;
  std::size_t min_cardinality = 0;
  std::size_t max_cardinality = 0;
  double mean_cardinality = 0.0;          // over nonempty cells
  std::vector<std::size_t> cardinality_hist;  // 10 bins on [0, max]
  std::vector<std::size_t> log_volume_hist;   // 10 bins on [min, max] log10 volume
  double min_log10_volume = 0.0;
  double max_log10_volume = 0.0;
  std::size_t edge_count = 0;
};

PartitionSummary summarize(const Partitioning& part, const PartitionGraph* graph = nullptr);

struct PartitionResult {
  Partitioning partitioning;
  PartitionGraph graph;
  PartitionSummary summary;
};

/// initialize -> merge -> split -> graph. m_per_dim defaults to default_grid.
PartitionResult partition_pipeline(const Catalog& cat, CardinalityBounds bounds,
                                   std::optional<std::vector<std::size_t>> m_per_dim = {});

/// Uniform grid with equally spaced boundaries, no merging or splitting.
Partitioning equal_volume_partition(const Catalog& cat, std::span<const std::size_t> m_per_dim);

/// Structural check used by tests and the CLI: returns an empty string when
/// every invariant of a finalized partitioning holds, else a description of
/// the first violation.
std::string check_partitioning(const Partitioning& part, const Catalog& cat, bool check_bounds);

}  // namespace subgp
