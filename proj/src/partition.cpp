#include "subgp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "subgp/error.hpp"

namespace subgp {

double HyperRect::volume() const {
  double v = 1.0;
  for (std::size_t p = 0; p < dim(); ++p) v *= upper[p] - lower[p];
  return v;
}

double HyperRect::aspect_ratio() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t p = 0; p < dim(); ++p) {
    const double side = upper[p] - lower[p];
    lo = std::min(lo, side);
    hi = std::max(hi, side);
  }
  return hi / lo;
}

bool HyperRect::contains_point(std::span<const double> x) const {
  for (std::size_t p = 0; p < dim(); ++p) {
    if (x[p] < lower[p]) return false;
    if (upper[p] >= 1.0 ? x[p] > upper[p] : x[p] >= upper[p]) return false;
  }
  return true;
}

std::vector<std::size_t> Partitioning::assignment(std::size_t n_points) const {
  std::vector<std::size_t> owner(n_points, static_cast<std::size_t>(-1));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t i : cells[c].members) owner[i] = c;
  }
  return owner;
}

std::vector<std::size_t> default_grid(std::size_t n, std::size_t dim, CardinalityBounds bounds) {
  const double target = 2.0 * static_cast<double>(n) /
                        static_cast<double>(bounds.n_min + bounds.n_max);
  const double per_dim = std::pow(std::max(target, 1.0), 1.0 / static_cast<double>(dim));
  // Guard against pow() landing a hair above an exact integer.
  const auto m = static_cast<std::size_t>(std::ceil(per_dim - 1e-9));
  return std::vector<std::size_t>(dim, std::max<std::size_t>(m, 1));
}

std::vector<double> quantile_boundaries(std::span<const double> values, std::size_t m) {
  if (m == 0) throw ConfigError("grid interval count must be >= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out{0.0};
  if (!sorted.empty()) {
    const double last = static_cast<double>(sorted.size() - 1);
    for (std::size_t j = 1; j < m; ++j) {
      const double h = last * static_cast<double>(j) / static_cast<double>(m);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      const double q = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
      if (q > out.back() && q < 1.0) out.push_back(q);
    }
  }
  out.push_back(1.0);
  return out;
}

namespace {

Partitioning grid_from_boundaries(const Catalog& cat, const std::vector<std::vector<double>>& bnd,
                                  CardinalityBounds bounds) {
  const std::size_t d = bnd.size();
  std::vector<std::size_t> m(d);
  std::size_t total = 1;
  for (std::size_t p = 0; p < d; ++p) {
    m[p] = bnd[p].size() - 1;
    total *= m[p];
  }
  Partitioning part;
  part.bounds = bounds;
  part.cells.resize(total);
  // Dimension 0 varies fastest in the cell index.
  for (std::size_t c = 0; c < total; ++c) {
    HyperRect& cell = part.cells[c];
    cell.lower.resize(d);
    cell.upper.resize(d);
    std::size_t rest = c;
    for (std::size_t p = 0; p < d; ++p) {
      const std::size_t j = rest % m[p];
      rest /= m[p];
      cell.lower[p] = bnd[p][j];
      cell.upper[p] = bnd[p][j + 1];
    }
  }
  for (std::size_t i = 0; i < cat.size(); ++i) {
    std::size_t c = 0;
    std::size_t stride = 1;
    for (std::size_t p = 0; p < d; ++p) {
      const double x = cat.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
      // Count interior boundaries <= x: half-open intervals, last one closed.
      const auto first = bnd[p].begin() + 1;
      const auto last = bnd[p].end() - 1;
      const auto j = static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
      c += j * stride;
      stride *= m[p];
    }
    part.cells[c].members.push_back(i);
  }
  return part;
}

}  // namespace

Partitioning initialize_grid(const Catalog& cat, std::span<const std::size_t> m_per_dim,
                             CardinalityBounds bounds) {
  if (m_per_dim.size() != cat.dim()) {
    throw ConfigError("grid has " + std::to_string(m_per_dim.size()) + " entries but data has " +
                      std::to_string(cat.dim()) + " dimensions");
  }
  std::vector<std::vector<double>> bnd(cat.dim());
  std::vector<double> column(cat.size());
  for (std::size_t p = 0; p < cat.dim(); ++p) {
    if (m_per_dim[p] == 0) throw ConfigError("grid interval count must be >= 1");
    for (std::size_t i = 0; i < cat.size(); ++i) {
      column[i] = cat.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
    }
    bnd[p] = quantile_boundaries(column, m_per_dim[p]);
    if (bnd[p].size() - 1 < m_per_dim[p]) {
      spdlog::warn("dimension {}: tied quantiles reduced the interval count from {} to {}", p + 1,
                   m_per_dim[p], bnd[p].size() - 1);
    }
  }
  return grid_from_boundaries(cat, bnd, bounds);
}

Partitioning equal_volume_partition(const Catalog& cat, std::span<const std::size_t> m_per_dim) {
  if (m_per_dim.size() != cat.dim()) throw ConfigError("grid dimensionality mismatch");
  std::vector<std::vector<double>> bnd(cat.dim());
  for (std::size_t p = 0; p < cat.dim(); ++p) {
    if (m_per_dim[p] == 0) throw ConfigError("grid interval count must be >= 1");
    const std::size_t m = m_per_dim[p];
    for (std::size_t j = 0; j <= m; ++j) {
      bnd[p].push_back(j == m ? 1.0 : static_cast<double>(j) / static_cast<double>(m));
    }
  }
  return grid_from_boundaries(cat, bnd, {});
}

// ---------------------------------------------------------------------------
// Merge

namespace {

bool overlaps(const HyperRect& a, const HyperRect& b) {
  for (std::size_t p = 0; p < a.dim(); ++p) {
    if (!(a.lower[p] < b.upper[p] && b.lower[p] < a.upper[p])) return false;
  }
  return true;
}

bool contains(const HyperRect& outer, const HyperRect& inner) {
  for (std::size_t p = 0; p < outer.dim(); ++p) {
    if (inner.lower[p] < outer.lower[p] || inner.upper[p] > outer.upper[p]) return false;
  }
  return true;
}

void extend(HyperRect& box, const HyperRect& other) {
  for (std::size_t p = 0; p < box.dim(); ++p) {
    box.lower[p] = std::min(box.lower[p], other.lower[p]);
    box.upper[p] = std::max(box.upper[p], other.upper[p]);
  }
}

bool same_box(const HyperRect& a, const HyperRect& b) {
  return a.lower == b.lower && a.upper == b.upper;
}

HyperRect bare_box(const HyperRect& c) { return HyperRect{c.lower, c.upper, {}, false}; }

struct FaceNeighbor {
  std::size_t cell;
  std::size_t dim;
  bool upper;
};

/// If b shares a face with a, the dimension and side of contact.
std::optional<std::pair<std::size_t, bool>> face_contact(const HyperRect& a, const HyperRect& b) {
  std::optional<std::pair<std::size_t, bool>> contact;
  for (std::size_t p = 0; p < a.dim(); ++p) {
    if (a.lower[p] < b.upper[p] && b.lower[p] < a.upper[p]) continue;
    if (contact) return std::nullopt;
    if (b.lower[p] == a.upper[p]) {
      contact = std::pair{p, true};
    } else if (b.upper[p] == a.lower[p]) {
      contact = std::pair{p, false};
    } else {
      return std::nullopt;
    }
  }
  return contact;
}

bool ratio_less(double a, double b) { return a < b * (1.0 - 1e-12); }

class Merger {
 public:
  Merger(Partitioning part, std::vector<MergeStep>* trace)
      : cells_(std::move(part.cells)), bounds_(part.bounds), trace_(trace) {
    alive_.assign(cells_.size(), true);
  }

  Partitioning run() {
    std::size_t total = 0;
    for (const auto& c : cells_) total += c.count();
    if (total < bounds_.n_min) {
      throw DataError("cannot satisfy the minimum cardinality: " + std::to_string(total) +
                      " points < n_min = " + std::to_string(bounds_.n_min));
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].count() < bounds_.n_min) candidates_.insert({cells_[i].count(), i});
    }
    while (!candidates_.empty() || !deferred_.empty()) {
      if (candidates_.empty()) {
        fallback_merge();
        continue;
      }
      std::size_t cur = candidates_.begin()->second;
      candidates_.erase(candidates_.begin());
      for (;;) {
        auto choice = best_direction(cur);
        if (!choice) {
          defer(cur);
          break;
        }
        cur = merge(cur, choice->absorbed, choice->box, choice->dim, choice->upper, false);
        if (cells_[cur].count() >= bounds_.n_min) break;
      }
    }
    Partitioning out;
    out.bounds = bounds_;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (alive_[i]) out.cells.push_back(std::move(cells_[i]));
    }
    return out;
  }

 private:
  struct Choice {
    std::size_t cost;
    double ratio;
    std::vector<std::size_t> absorbed;
    HyperRect box;
    std::size_t dim;
    bool upper;
  };

  std::vector<FaceNeighbor> face_neighbors(std::size_t i) const {
    std::vector<FaceNeighbor> out;
    for (std::size_t j = 0; j < cells_.size(); ++j) {
      if (j == i || !alive_[j]) continue;
      if (auto c = face_contact(cells_[i], cells_[j])) out.push_back({j, c->first, c->second});
    }
    return out;
  }

  /// Alive cells (other than `self`) overlapping `box` with positive volume.
  std::vector<std::size_t> overlapping(const HyperRect& box, std::size_t self) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < cells_.size(); ++j) {
      if (j != self && alive_[j] && overlaps(box, cells_[j])) out.push_back(j);
    }
    return out;
  }

  std::size_t absorbed_count(const std::vector<std::size_t>& idx) const {
    std::size_t n = 0;
    for (std::size_t j : idx) n += cells_[j].count();
    return n;
  }

  /// One neighbor layer along (p, side), closed under the bounding box. The
  /// direction is feasible only if every cell meeting the box lies inside it.
  std::optional<Choice> best_direction(std::size_t i) const {
    const auto nbrs = face_neighbors(i);
    std::optional<Choice> best;
    for (std::size_t p = 0; p < cells_[i].dim(); ++p) {
      for (bool upper : {false, true}) {
        HyperRect box = bare_box(cells_[i]);
        bool any = false;
        for (const auto& nb : nbrs) {
          if (nb.dim == p && nb.upper == upper) {
            extend(box, cells_[nb.cell]);
            any = true;
          }
        }
        if (!any) continue;
        auto absorbed = overlapping(box, i);
        bool feasible = true;
        for (std::size_t j : absorbed) {
          if (!contains(box, cells_[j])) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        const std::size_t cost = absorbed_count(absorbed);
        const double ratio = box.aspect_ratio();
        if (!best || cost < best->cost || (cost == best->cost && ratio_less(ratio, best->ratio))) {
          best = Choice{cost, ratio, std::move(absorbed), std::move(box), p, upper};
        }
      }
    }
    return best;
  }

  void defer(std::size_t i) {
    HyperRect region = bare_box(cells_[i]);
    for (const auto& nb : face_neighbors(i)) extend(region, cells_[nb.cell]);
    deferred_.emplace(i, std::move(region));
  }

  /// Every sub-minimal cell is deferred: merge the smallest with the face
  /// neighbor whose bounding-box closure absorbs the fewest points.
  void fallback_merge() {
    std::size_t target = deferred_.begin()->first;
    for (const auto& [i, region] : deferred_) {
      if (cells_[i].count() < cells_[target].count()) target = i;
    }
    deferred_.erase(target);

    std::optional<Choice> best;
    for (const auto& nb : face_neighbors(target)) {
      HyperRect box = bare_box(cells_[target]);
      extend(box, cells_[nb.cell]);
      std::vector<std::size_t> absorbed;
      for (;;) {
        absorbed = overlapping(box, target);
        HyperRect grown = box;
        for (std::size_t j : absorbed) extend(grown, cells_[j]);
        if (same_box(grown, box)) break;
        box = std::move(grown);
      }
      const std::size_t cost = absorbed_count(absorbed);
      const double ratio = box.aspect_ratio();
      if (!best || cost < best->cost || (cost == best->cost && ratio_less(ratio, best->ratio))) {
        best = Choice{cost, ratio, std::move(absorbed), std::move(box), nb.dim, nb.upper};
      }
    }
    if (!best) throw DataError("merge: sub-minimal cell has no neighbors");
    const std::size_t merged =
        merge(target, best->absorbed, best->box, best->dim, best->upper, true);
    if (cells_[merged].count() < bounds_.n_min) candidates_.insert({cells_[merged].count(), merged});
  }

  std::size_t merge(std::size_t target, const std::vector<std::size_t>& absorbed, HyperRect box,
                    std::size_t dim, bool upper, bool fallback) {
    box.members = std::move(cells_[target].members);
    alive_[target] = false;
    for (std::size_t j : absorbed) {
      candidates_.erase({cells_[j].count(), j});
      deferred_.erase(j);
      auto& m = cells_[j].members;
      box.members.insert(box.members.end(), m.begin(), m.end());
      m.clear();
      m.shrink_to_fit();
      alive_[j] = false;
    }
    std::sort(box.members.begin(), box.members.end());
    const std::size_t id = cells_.size();
    // Deferred cells whose neighborhood changed get another chance.
    for (auto it = deferred_.begin(); it != deferred_.end();) {
      if (overlaps(it->second, box)) {
        candidates_.insert({cells_[it->first].count(), it->first});
        it = deferred_.erase(it);
      } else {
        ++it;
      }
    }
    cells_.push_back(std::move(box));
    alive_.push_back(true);
    if (trace_) trace_->push_back({target, absorbed, dim, upper, fallback, id});
    return id;
  }

  std::vector<HyperRect> cells_;
  std::vector<bool> alive_;
  CardinalityBounds bounds_;
  std::vector<MergeStep>* trace_;
  std::set<std::pair<std::size_t, std::size_t>> candidates_;  // (count, index)
  std::map<std::size_t, HyperRect> deferred_;                 // index -> neighborhood box
};

}  // namespace

Partitioning merge_pass(Partitioning part, std::vector<MergeStep>* trace) {
  if (part.cells.empty()) throw DataError("merge: partitioning has no cells");
  return Merger(std::move(part), trace).run();
}

// ---------------------------------------------------------------------------
// Split

namespace {

/// Position j (left child = sorted[0..j)) of the cut nearest the median
/// such that both children keep at least n_min points and the cut value
/// lies strictly inside the cell.
std::optional<std::size_t> find_cut(const std::vector<double>& sorted, std::size_t n_min,
                                    double upper) {
  const std::size_t n = sorted.size();
  if (n < 2 * n_min || n < 2) return std::nullopt;
  auto valid = [&](std::size_t j) {
    return j >= std::max<std::size_t>(n_min, 1) && n - j >= n_min && sorted[j - 1] < sorted[j] &&
           sorted[j] < upper;
  };
  const std::size_t k = n / 2;
  for (std::size_t off = 0; off <= n; ++off) {
    if (off <= k && valid(k - off)) return k - off;
    if (k + off < n && valid(k + off)) return k + off;
    if (off > k && k + off >= n) break;
  }
  return std::nullopt;
}

}  // namespace

Partitioning split_pass(Partitioning part, const Catalog& cat) {
  const std::size_t n_min = part.bounds.n_min;
  const std::size_t n_max = part.bounds.n_max;
  if (n_max < 2 * n_min) {
    throw ConfigError("n_max must be at least 2 * n_min (got n_min=" + std::to_string(n_min) +
                      ", n_max=" + std::to_string(n_max) + ")");
  }
  std::priority_queue<std::pair<std::size_t, std::size_t>> queue;  // (count, ~index)
  auto push = [&](std::size_t c) {
    if (part.cells[c].count() > n_max && !part.cells[c].oversize) {
      queue.push({part.cells[c].count(), ~c});
    }
  };
  for (std::size_t c = 0; c < part.cells.size(); ++c) push(c);

  std::vector<double> values;
  while (!queue.empty()) {
    const std::size_t c = ~queue.top().second;
    queue.pop();
    HyperRect& cell = part.cells[c];
    const std::size_t d = cell.dim();
    std::vector<std::size_t> dims(d);
    std::iota(dims.begin(), dims.end(), std::size_t{0});
    std::stable_sort(dims.begin(), dims.end(), [&](std::size_t a, std::size_t b) {
      return cell.upper[a] - cell.lower[a] > cell.upper[b] - cell.lower[b];
    });
    bool split = false;
    for (std::size_t p : dims) {
      values.clear();
      for (std::size_t i : cell.members) {
        values.push_back(cat.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)));
      }
      std::sort(values.begin(), values.end());
      const auto j = find_cut(values, n_min, cell.upper[p]);
      if (!j) continue;
      const double cut = values[*j];
      HyperRect left{cell.lower, cell.upper, {}, false};
      HyperRect right{cell.lower, cell.upper, {}, false};
      left.upper[p] = cut;
      right.lower[p] = cut;
      for (std::size_t i : cell.members) {
        const double x = cat.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
        (x < cut ? left : right).members.push_back(i);
      }
      part.cells[c] = std::move(left);
      part.cells.push_back(std::move(right));
      push(c);
      push(part.cells.size() - 1);
      split = true;
      break;
    }
    if (!split) {
      cell.oversize = true;
      spdlog::warn("cell with {} points cannot be split without violating n_min; flagged oversize",
                   cell.count());
    }
  }
  return part;
}

// ---------------------------------------------------------------------------
// Graph

PartitionGraph build_graph(const Partitioning& part) {
  const std::size_t n = part.cells.size();
  PartitionGraph g;
  g.adjacency.resize(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return part.cells[a].lower[0] < part.cells[b].lower[0];
  });
  // Sweep along dimension 0: closures can only meet if their dim-0 ranges do.
  for (std::size_t a = 0; a < n; ++a) {
    const HyperRect& ca = part.cells[order[a]];
    for (std::size_t b = a + 1; b < n; ++b) {
      const HyperRect& cb = part.cells[order[b]];
      if (cb.lower[0] > ca.upper[0]) break;
      if (face_contact(ca, cb)) {
        const auto [i, j] = std::minmax(order[a], order[b]);
        g.edges.emplace_back(i, j);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  for (const auto& [i, j] : g.edges) {
    g.adjacency[i].push_back(j);
    g.adjacency[j].push_back(i);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

// ---------------------------------------------------------------------------
// Pipeline

PartitionSummary summarize(const Partitioning& part, const PartitionGraph* graph) {
  PartitionSummary s;
  s.cell_count = part.cells.size();
  s.cardinality_hist.assign(10, 0);
  s.log_volume_hist.assign(10, 0);
  if (part.cells.empty()) return s;
  s.min_cardinality = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  s.min_log10_volume = std::numeric_limits<double>::infinity();
  s.max_log10_volume = -std::numeric_limits<double>::infinity();
  for (const auto& c : part.cells) {
    s.min_cardinality = std::min(s.min_cardinality, c.count());
    s.max_cardinality = std::max(s.max_cardinality, c.count());
    total += c.count();
    if (c.count() == 0) {
      ++s.empty_count;
    } else {
      ++s.nonempty_count;
    }
    if (c.oversize) ++s.oversize_count;
    const double lv = std::log10(c.volume());
    s.min_log10_volume = std::min(s.min_log10_volume, lv);
    s.max_log10_volume = std::max(s.max_log10_volume, lv);
  }
  s.mean_cardinality =
      s.nonempty_count ? static_cast<double>(total) / static_cast<double>(s.nonempty_count) : 0.0;
  const double vspan = s.max_log10_volume - s.min_log10_volume;
  for (const auto& c : part.cells) {
    const std::size_t cb = s.max_cardinality == 0
                               ? 0
                               : std::min<std::size_t>(9, c.count() * 10 / (s.max_cardinality + 1));
    ++s.cardinality_hist[cb];
    const double lv = std::log10(c.volume());
    const std::size_t vb =
        vspan > 0 ? std::min<std::size_t>(
                        9, static_cast<std::size_t>((lv - s.min_log10_volume) / vspan * 10.0))
                  : 0;
    ++s.log_volume_hist[vb];
  }
  if (graph) s.edge_count = graph->edges.size();
  return s;
}

PartitionResult partition_pipeline(const Catalog& cat, CardinalityBounds bounds,
                                   std::optional<std::vector<std::size_t>> m_per_dim) {
  if (bounds.n_min < 1) throw ConfigError("n_min must be >= 1");
  if (bounds.n_max < 2 * bounds.n_min) {
    throw ConfigError("n_max must be at least 2 * n_min (got n_min=" +
                      std::to_string(bounds.n_min) + ", n_max=" + std::to_string(bounds.n_max) +
                      ")");
  }
  if (cat.empty()) throw DataError("catalog is empty");
  if (cat.size() < bounds.n_min) {
    throw DataError("catalog has " + std::to_string(cat.size()) + " points, fewer than n_min = " +
                    std::to_string(bounds.n_min));
  }
  const auto grid = m_per_dim ? *m_per_dim : default_grid(cat.size(), cat.dim(), bounds);
  PartitionResult r;
  r.partitioning = initialize_grid(cat, grid, bounds);
  r.partitioning = merge_pass(std::move(r.partitioning));
  r.partitioning = split_pass(std::move(r.partitioning), cat);
  r.graph = build_graph(r.partitioning);
  r.summary = summarize(r.partitioning, &r.graph);
  return r;
}

std::string check_partitioning(const Partitioning& part, const Catalog& cat, bool check_bounds) {
  std::ostringstream err;
  std::vector<int> seen(cat.size(), 0);
  double total_volume = 0.0;
  for (std::size_t c = 0; c < part.cells.size(); ++c) {
    const HyperRect& cell = part.cells[c];
    for (std::size_t p = 0; p < cell.dim(); ++p) {
      if (!(cell.lower[p] < cell.upper[p]) || cell.lower[p] < 0.0 || cell.upper[p] > 1.0) {
        err << "cell " << c << " is not a proper box in dimension " << p;
        return err.str();
      }
    }
    total_volume += cell.volume();
    for (std::size_t i : cell.members) {
      if (i >= cat.size()) {
        err << "cell " << c << " has out-of-range member " << i;
        return err.str();
      }
      if (seen[i]++) {
        err << "point " << i << " belongs to more than one cell";
        return err.str();
      }
      if (!cell.contains_point(cat.row(i))) {
        err << "point " << i << " lies outside its cell " << c;
        return err.str();
      }
    }
    if (check_bounds && !cell.oversize &&
        (cell.count() < part.bounds.n_min || cell.count() > part.bounds.n_max)) {
      err << "cell " << c << " has cardinality " << cell.count() << " outside ["
          << part.bounds.n_min << ", " << part.bounds.n_max << "]";
      return err.str();
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      err << "point " << i << " is not assigned to any cell";
      return err.str();
    }
  }
  if (std::abs(total_volume - 1.0) > 1e-9) {
    err << "cell volumes sum to " << total_volume << ", not 1";
    return err.str();
  }
  for (std::size_t a = 0; a < part.cells.size(); ++a) {
    for (std::size_t b = a + 1; b < part.cells.size(); ++b) {
      if (overlaps(part.cells[a], part.cells[b])) {
        err << "cells " << a << " and " << b << " overlap";
        return err.str();
      }
    }
  }
  return {};
}

}  // namespace subgp
