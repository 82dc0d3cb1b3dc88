#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "subgp/error.hpp"
#include "subgp/partition.hpp"
#include "subgp/random.hpp"
#include "subgp/sampler.hpp"

using namespace subgp;

namespace {

/// 1D catalog whose cells are consecutive intervals of equal width holding
/// the given response sets.
struct Fixture {
  Catalog cat;
  Partitioning part;
  PartitionGraph graph;
};

Fixture intervals(const std::vector<std::vector<double>>& ys) {
  Fixture f;
  std::size_t n = 0;
  for (const auto& c : ys) n += c.size();
  f.cat.X.resize(static_cast<Eigen::Index>(n), 1);
  f.cat.y.resize(static_cast<Eigen::Index>(n));
  f.cat.transform = NormalizationState::identity(1);
  const double w = 1.0 / static_cast<double>(ys.size());
  std::size_t i = 0;
  for (std::size_t c = 0; c < ys.size(); ++c) {
    HyperRect h;
    h.lower = {w * static_cast<double>(c)};
    h.upper = {c + 1 == ys.size() ? 1.0 : w * static_cast<double>(c + 1)};
    for (std::size_t k = 0; k < ys[c].size(); ++k, ++i) {
      f.cat.X(static_cast<Eigen::Index>(i), 0) = h.lower[0] + w * (static_cast<double>(k) + 0.5) / static_cast<double>(ys[c].size());
      f.cat.y(static_cast<Eigen::Index>(i)) = ys[c][k];
      h.members.push_back(i);
    }
    f.part.cells.push_back(h);
  }
  f.cat.source_rows.resize(n);
  std::iota(f.cat.source_rows.begin(), f.cat.source_rows.end(), std::size_t{0});
  f.part.bounds = {2, 1000};
  f.graph = build_graph(f.part);
  return f;
}

PartitionGraph graph_from_edges(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  PartitionGraph g;
  g.adjacency.resize(n);
  for (auto [a, b] : edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  std::sort(edges.begin(), edges.end());
  g.edges = std::move(edges);
  return g;
}

double sample_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(CellVariances, MatchesDirectComputation) {
  const std::vector<std::vector<double>> ys{{0.0, 0.1}, {0.0, 5.0}, {1.0, 2.0, 4.0}};
  const Fixture f = intervals(ys);
  const auto v = cell_variances(f.cat, f.part);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(v[c], sample_variance(ys[c]), 1e-14);
}

TEST(CellVariances, SingletonCellRejected) {
  const Fixture f = intervals({{0.0, 1.0}, {2.0}});
  EXPECT_THROW(cell_variances(f.cat, f.part), ConfigError);
}

TEST(SelectStart, LargestVariance) {
  const Fixture f = intervals({{0.0, 0.1}, {0.0, 5.0}});
  const auto v = cell_variances(f.cat, f.part);
  EXPECT_EQ(select_start(v), 1u);
}

TEST(SelectStart, TiesGoToLowestIndex) {
  const std::vector<double> v{2.0, 2.0, 2.0};
  EXPECT_EQ(select_start(v), 0u);
  const std::vector<bool> allowed{false, true, true};
  EXPECT_EQ(select_start(v, &allowed), 1u);
}

TEST(SelectStart, ThreeCellOracle) {
  const std::vector<std::vector<double>> ys{{0.3, 0.9, -0.2, 1.1}, {2.0, -2.0, 0.5}, {0.0, 0.7, 1.4, 2.1, 2.8}};
  const Fixture f = intervals(ys);
  std::size_t best = 0;
  for (std::size_t c = 1; c < ys.size(); ++c) {
    if (sample_variance(ys[c]) > sample_variance(ys[best])) best = c;
  }
  EXPECT_EQ(select_start(cell_variances(f.cat, f.part)), best);
}

TEST(NextCell, PathGraphForcedChoice) {
  const auto g = graph_from_edges(3, {{0, 1}, {1, 2}});
  const std::vector<double> var{1.0, 0.5, 9.0};
  const std::vector<bool> visited{true, false, false};
  EXPECT_EQ(next_cell(visited, var, g), std::optional<std::size_t>(1));
}

TEST(NextCell, StarPicksLargestLeaf) {
  const auto g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  const std::vector<double> var{0.1, 1.0, 3.0, 2.0};
  const std::vector<bool> visited{true, false, false, false};
  EXPECT_EQ(next_cell(visited, var, g), std::optional<std::size_t>(2));
}

TEST(NextCell, EmptyFrontier) {
  const auto g = graph_from_edges(3, {{0, 1}});
  const std::vector<double> var{1.0, 1.0, 1.0};
  const std::vector<bool> visited{true, true, false};
  EXPECT_FALSE(next_cell(visited, var, g).has_value());
}

TEST(PlanVisits, DisconnectedComponentsEachSeededByVariance) {
  Fixture f = intervals({{0.0, 0.1}, {0.0, 3.0}, {0.0, 1.0}, {0.0, 5.0}, {0.0, 0.2}});
  f.graph = graph_from_edges(5, {{0, 1}, {1, 2}, {3, 4}});
  const VisitPlan plan = plan_visits(f.cat, f.part, f.graph);
  EXPECT_EQ(plan.order, (std::vector<std::size_t>{3, 4, 1, 2, 0}));
  EXPECT_EQ(plan.component_start, (std::vector<bool>{true, false, true, false, false}));
  EXPECT_TRUE(plan.conditioning[0].empty());
  EXPECT_EQ(plan.conditioning[1], (std::vector<std::size_t>{3}));
  EXPECT_TRUE(plan.conditioning[2].empty());
}

TEST(ConditionalWeights, UniformWithoutNeighbors) {
  const std::vector<double> y{0.0, 1.0, 5.0, -3.0};
  const auto lw = conditional_log_weights(y, {}, 0.5);
  for (double w : lw) EXPECT_NEAR(std::exp(w), 0.25, 1e-15);
}

TEST(ConditionalWeights, FarMemberNearlyExcluded) {
  const std::vector<double> y{0.1, 9.9};
  const std::vector<double> nb{0.0};
  const auto lw = conditional_log_weights(y, nb, 1.0);
  const double a = std::exp(-0.005);
  const double b = std::exp(-49.005);
  const double p_far = b / (a + b);
  EXPECT_NEAR(p_far, 5.243e-22, 0.001e-22);
  EXPECT_NEAR(std::exp(lw[1]) / p_far, 1.0, 1e-10);
  EXPECT_NEAR(std::exp(lw[0]), a / (a + b), 1e-15);
}

TEST(ConditionalWeights, LogSpaceSurvivesUnderflow) {
  const std::vector<double> y{100.0, 101.0};
  const std::vector<double> nb{0.0, -1.0, 0.5};
  const auto lw = conditional_log_weights(y, nb, 0.1);
  for (double w : lw) EXPECT_TRUE(std::isfinite(w));
  EXPECT_NEAR(std::exp(lw[0]) + std::exp(lw[1]), 1.0, 1e-12);
}

TEST(ConditionalWeights, WideKernelFlattens) {
  const std::vector<double> y{-2.0, 0.0, 3.0};
  const std::vector<double> nb{1.0};
  const auto lw = conditional_log_weights(y, nb, 1e6);
  for (double w : lw) EXPECT_NEAR(std::exp(w), 1.0 / 3.0, 1e-9);
}

TEST(DrawSubsample, SingleCellUniform) {
  const Fixture f = intervals({{0.0, 1.0, 2.0, 3.0}});
  std::vector<int> hits(4, 0);
  for (std::uint64_t s = 0; s < 40000; ++s) ++hits[draw_subsample(f.cat, f.part, f.graph, {0.5, s}).chosen[0]];
  for (int h : hits) EXPECT_NEAR(h / 40000.0, 0.25, 0.01);
}

TEST(DrawSubsample, DeterministicAndValid) {
  const Fixture f = intervals({{0.0, 1.0}, {0.5, 0.7, 2.0}, {1.0, 1.1, 1.3}, {-1.0, 0.0}});
  const auto a = draw_subsample(f.cat, f.part, f.graph, {0.5, 42}, true);
  const auto b = draw_subsample(f.cat, f.part, f.graph, {0.5, 42}, true);
  EXPECT_EQ(a.chosen, b.chosen);
  EXPECT_EQ(a.visit_order, b.visit_order);
  ASSERT_EQ(a.chosen.size(), f.part.size());
  for (std::size_t c = 0; c < f.part.size(); ++c) {
    const auto& m = f.part.cells[c].members;
    EXPECT_NE(std::find(m.begin(), m.end(), a.chosen[c]), m.end());
  }
  ASSERT_EQ(a.trace.size(), f.part.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    EXPECT_EQ(a.trace[k].step, k);
    EXPECT_EQ(a.trace[k].cell, a.visit_order[k]);
    EXPECT_EQ(a.trace[k].chosen_index, a.chosen[a.trace[k].cell]);
    EXPECT_GE(a.trace[k].weight_entropy, 0.0);
  }
}

TEST(DrawSubsample, TwoCellJointMatchesEnumeration) {
  const std::vector<std::vector<double>> ys{{-1.0, 0.0, 2.0}, {-0.5, 0.3, 1.5, 1.9}};
  const Fixture f = intervals(ys);
  const double eta = 0.5;
  // Visit order: larger sample variance first, then its neighbor conditioned
  // on the first draw.
  const std::size_t first = sample_variance(ys[0]) >= sample_variance(ys[1]) ? 0 : 1;
  const std::size_t second = 1 - first;
  std::map<std::pair<std::size_t, std::size_t>, double> exact;
  for (std::size_t a = 0; a < ys[first].size(); ++a) {
    std::vector<double> w(ys[second].size());
    double z = 0.0;
    for (std::size_t b = 0; b < w.size(); ++b) {
      const double d = ys[second][b] - ys[first][a];
      w[b] = std::exp(-d * d / (2 * eta * eta));
      z += w[b];
    }
    for (std::size_t b = 0; b < w.size(); ++b) {
      exact[{a, b}] = w[b] / z / static_cast<double>(ys[first].size());
    }
  }
  const std::size_t reps = 100000;
  const VisitPlan plan = plan_visits(f.cat, f.part, f.graph);
  ASSERT_EQ(plan.order.front(), first);
  std::map<std::pair<std::size_t, std::size_t>, double> freq;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto d = draw_subsample(f.cat, f.part, plan, {eta, r});
    const std::size_t a = d.chosen[first] - f.part.cells[first].members.front();
    const std::size_t b = d.chosen[second] - f.part.cells[second].members.front();
    freq[{a, b}] += 1.0 / static_cast<double>(reps);
  }
  double tv = 0.0;
  for (const auto& [k, p] : exact) tv += std::abs(p - freq[k]);
  tv *= 0.5;
  EXPECT_LT(tv, 0.01);
}

TEST(DrawSubsample, SmallerEtaPullsSecondDrawCloser) {
  // Enumerated probability that the second draw is the member nearest to
  // the first draw, as a function of eta.
  const std::vector<double> first{-1.0, 0.0, 2.0};
  const std::vector<double> second{-0.5, 0.3, 1.5, 1.9};
  auto p_nearest = [&](double eta) {
    double p = 0.0;
    for (double a : first) {
      const std::vector<double> nb{a};
      const auto lw = conditional_log_weights(second, nb, eta);
      std::size_t nearest = 0;
      for (std::size_t b = 1; b < second.size(); ++b) {
        if (std::abs(second[b] - a) < std::abs(second[nearest] - a)) nearest = b;
      }
      p += std::exp(lw[nearest]) / static_cast<double>(first.size());
    }
    return p;
  };
  double prev = 0.0;
  for (double eta : {4.0, 2.0, 1.0, 0.5, 0.25, 0.1}) {
    const double p = p_nearest(eta);
    EXPECT_GT(p, prev) << "eta=" << eta;
    prev = p;
  }
}

TEST(DrawSubsample, VisitOrderIsFrontierWalk) {
  Rng rng(5);
  std::vector<std::vector<double>> ys(12);
  for (auto& c : ys) {
    c.resize(3 + static_cast<std::size_t>(uniform01(rng) * 4));
    for (auto& v : c) v = standard_normal(rng);
  }
  const Fixture f = intervals(ys);
  const VisitPlan plan = plan_visits(f.cat, f.part, f.graph);
  std::vector<std::size_t> sorted = plan.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t c = 0; c < sorted.size(); ++c) ASSERT_EQ(sorted[c], c);
  std::vector<bool> visited(ys.size(), false);
  for (std::size_t k = 0; k < plan.order.size(); ++k) {
    const std::size_t c = plan.order[k];
    if (!plan.component_start[k]) {
      bool has_visited_neighbor = false;
      for (auto nb : f.graph.neighbors(c)) has_visited_neighbor |= visited[nb];
      EXPECT_TRUE(has_visited_neighbor) << "step " << k;
    }
    for (auto nb : plan.conditioning[k]) EXPECT_TRUE(visited[nb]);
    visited[c] = true;
  }
  // 1D chain is connected: a single seed.
  EXPECT_EQ(std::count(plan.component_start.begin(), plan.component_start.end(), true), 1);
}

TEST(DrawSubsample, EveryMemberReachable) {
  const Fixture f = intervals({{-3.0, 0.0, 3.0}, {-2.0, 2.0}});
  std::vector<int> seen(f.cat.size(), 0);
  for (std::uint64_t s = 0; s < 5000; ++s) {
    for (auto i : draw_subsample(f.cat, f.part, f.graph, {1.5, s}).chosen) seen[i] = 1;
  }
  for (int v : seen) EXPECT_EQ(v, 1);
}
