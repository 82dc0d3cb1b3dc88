#include "subgp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "subgp/error.hpp"

namespace subgp {

std::vector<double> cell_variances(const Catalog& cat, const Partitioning& part) {
  std::vector<double> var(part.cells.size());
  for (std::size_t c = 0; c < part.cells.size(); ++c) {
    const auto& members = part.cells[c].members;
    if (members.size() < 2) {
      throw ConfigError("cell " + std::to_string(c) + " has " + std::to_string(members.size()) +
                        " member(s); conditional sampling needs at least 2 (use n_min >= 2)");
    }
    double mean = 0.0;
    for (std::size_t i : members) mean += cat.y(static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(members.size());
    double ss = 0.0;
    for (std::size_t i : members) {
      const double dy = cat.y(static_cast<Eigen::Index>(i)) - mean;
      ss += dy * dy;
    }
    var[c] = ss / static_cast<double>(members.size() - 1);
  }
  return var;
}

std::size_t select_start(std::span<const double> variance, const std::vector<bool>* allowed) {
  std::size_t best = variance.size();
  for (std::size_t c = 0; c < variance.size(); ++c) {
    if (allowed && !(*allowed)[c]) continue;
    if (best == variance.size() || variance[c] > variance[best]) best = c;
  }
  if (best == variance.size()) throw ConfigError("select_start: no eligible cell");
  return best;
}

std::optional<std::size_t> next_cell(const std::vector<bool>& visited, std::span<const double> variance,
                                     const PartitionGraph& graph) {
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < visited.size(); ++c) {
    if (!visited[c]) continue;
    for (std::size_t nb : graph.neighbors(c)) {
      if (visited[nb]) continue;
      if (!best || variance[nb] > variance[*best] || (variance[nb] == variance[*best] && nb < *best)) {
        best = nb;
      }
    }
  }
  return best;
}

VisitPlan plan_visits(const Catalog& cat, const Partitioning& part, const PartitionGraph& graph) {
  const std::size_t n = part.cells.size();
  if (graph.node_count() != n) throw ConfigError("graph and partitioning disagree on cell count");
  VisitPlan plan;
  plan.variance = cell_variances(cat, part);
  const auto& var = plan.variance;

  // Frontier ordered by (variance desc, index asc); equivalent to calling
  // next_cell at every step, without the quadratic rescans.
  auto worse = [&](std::size_t a, std::size_t b) {
    return var[a] < var[b] || (var[a] == var[b] && a > b);
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> frontier(worse);
  std::vector<bool> visited(n, false);
  std::vector<bool> queued(n, false);
  std::vector<bool> unvisited(n, true);
  plan.order.reserve(n);
  while (plan.order.size() < n) {
    std::size_t c;
    bool fresh = false;
    if (frontier.empty()) {
      c = select_start(var, &unvisited);
      fresh = true;
    } else {
      c = frontier.top();
      frontier.pop();
    }
    visited[c] = true;
    unvisited[c] = false;
    std::vector<std::size_t> cond;
    for (std::size_t nb : graph.neighbors(c)) {
      if (visited[nb]) {
        cond.push_back(nb);
      } else if (!queued[nb]) {
        queued[nb] = true;
        frontier.push(nb);
      }
    }
    plan.order.push_back(c);
    plan.conditioning.push_back(std::move(cond));
    plan.component_start.push_back(fresh);
  }
  return plan;
}

std::vector<double> conditional_log_weights(std::span<const double> member_y,
                                            std::span<const double> neighbor_draws, double eta) {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  const std::size_t n = member_y.size();
  std::vector<double> lw(n, 0.0);
  if (n == 0) return lw;
  const double inv = 1.0 / (2.0 * eta * eta);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double ys : neighbor_draws) {
      const double dy = member_y[j] - ys;
      s -= dy * dy * inv;
    }
    lw[j] = s;
  }
  const double top = *std::max_element(lw.begin(), lw.end());
  double total = 0.0;
  for (double v : lw) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  for (double& v : lw) v -= log_norm;
  return lw;
}

namespace {

std::size_t draw_from_log_weights(const std::vector<double>& lw, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < lw.size(); ++j) {
    acc += std::exp(lw[j]);
    if (u < acc) return j;
  }
  // Rounding left the cumulative sum a hair below 1; take the last member
  // with non-negligible weight.
  std::size_t j = lw.size() - 1;
  while (j > 0 && !(std::exp(lw[j]) > 0.0)) --j;
  return j;
}

double entropy(const std::vector<double>& lw) {
  double h = 0.0;
  for (double v : lw) {
    const double p = std::exp(v);
    if (p > 0.0) h -= p * v;
  }
  return h;
}

}  // namespace

std::size_t conditional_draw(std::span<const double> member_y, std::span<const double> neighbor_draws,
                             double eta, Rng& rng) {
  if (member_y.empty()) throw ConfigError("conditional_draw: empty cell");
  return draw_from_log_weights(conditional_log_weights(member_y, neighbor_draws, eta), rng);
}

SubsampleDraw draw_subsample(const Catalog& cat, const Partitioning& part, const VisitPlan& plan,
                             const SamplerConfig& cfg, bool record_trace) {
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
  Rng rng(cfg.seed);
  SubsampleDraw out;
  out.chosen.assign(part.cells.size(), 0);
  out.visit_order = plan.order;
  std::vector<double> drawn_y(part.cells.size(), 0.0);
  std::vector<double> member_y;
  std::vector<double> cond_y;
  for (std::size_t step = 0; step < plan.order.size(); ++step) {
    const std::size_t c = plan.order[step];
    const auto& members = part.cells[c].members;
    member_y.resize(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      member_y[k] = cat.y(static_cast<Eigen::Index>(members[k]));
    }
    cond_y.clear();
    for (std::size_t nb : plan.conditioning[step]) cond_y.push_back(drawn_y[nb]);
    const auto lw = conditional_log_weights(member_y, cond_y, cfg.eta);
    const std::size_t k = draw_from_log_weights(lw, rng);
    out.chosen[c] = members[k];
    drawn_y[c] = member_y[k];
    if (record_trace) {
      out.trace.push_back({step, c, members[k], plan.conditioning[step], entropy(lw)});
    }
  }
  return out;
}

SubsampleDraw draw_subsample(const Catalog& cat, const Partitioning& part,
                             const PartitionGraph& graph, const SamplerConfig& cfg,
                             bool record_trace) {
  return draw_subsample(cat, part, plan_visits(cat, part, graph), cfg, record_trace);
}

}  // namespace subgp
