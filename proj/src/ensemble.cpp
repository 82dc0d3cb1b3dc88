#include "subgp/ensemble.hpp"

#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "subgp/error.hpp"
#include "subgp/parallel.hpp"

namespace subgp {

GPModel train_member(const Catalog& cat, const Partitioning& part, const VisitPlan& plan,
                     double eta, std::uint64_t seed, const GPFitOptions& gp, SubsampleDraw* draw_out,
                     bool record_trace) {
  SubsampleDraw draw = draw_subsample(cat, part, plan, {eta, seed}, record_trace);
  const auto m = static_cast<Eigen::Index>(draw.chosen.size());
  Matrix X(m, cat.X.cols());
  Vector y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = static_cast<Eigen::Index>(draw.chosen[static_cast<std::size_t>(k)]);
    X.row(k) = cat.X.row(i);
    y(k) = cat.y(i);
  }
  GPFitOptions opts = gp;
  opts.seed = seed;
  GPModel model = fit(X, y, opts);
  if (draw_out) *draw_out = std::move(draw);
  return model;
}

EnsembleModel train_ensemble(const Catalog& cat, const Partitioning& part,
                             const PartitionGraph& graph, const EnsembleOptions& options) {
  if (options.members < 1) throw ConfigError("ensemble size must be >= 1");
  if (!(options.sampler.eta > 0.0)) throw ConfigError("eta must be positive");
  const VisitPlan plan = plan_visits(cat, part, graph);
  if (plan.order.size() < 2) throw ConfigError("need at least 2 cells to fit a GP member");

  const std::size_t n = options.members;
  std::vector<std::optional<GPModel>> models(n);
  std::vector<std::uint64_t> seeds(n);
  std::vector<SubsampleDraw> draws(n);

  parallel_for(n, options.threads, [&](std::size_t i) {
    std::uint64_t seed = member_seed(options.sampler.seed, i);
    for (int attempt = 0;; ++attempt) {
      try {
        SubsampleDraw draw;
        models[i].emplace(train_member(cat, part, plan, options.sampler.eta, seed, options.gp, &draw,
                                       options.record_traces));
        seeds[i] = seed;
        draws[i] = std::move(draw);
        return;
      } catch (const NumericalError& e) {
        if (attempt > 0) {
          throw NumericalError("ensemble member " + std::to_string(i) + " failed after retry: " +
                               e.what());
        }
        spdlog::warn("ensemble member {} failed ({}); retrying with a new sub-seed", i, e.what());
        seed = retry_seed(seed);
      }
    }
  });

  EnsembleModel out;
  out.options = options;
  out.bounds = part.bounds;
  out.seeds = std::move(seeds);
  out.draws = std::move(draws);
  out.members.reserve(n);
  for (auto& m : models) out.members.push_back(std::move(*m));
  return out;
}

MixturePredictive predictive(std::span<const GPModel> members, std::span<const double> x,
                             VarianceMode mode) {
  MixturePredictive mp;
  mp.means.reserve(members.size());
  mp.variances.reserve(members.size());
  for (const auto& m : members) {
    if (x.size() != m.dim()) {
      throw ConfigError("query has " + std::to_string(x.size()) + " inputs, model expects " +
                        std::to_string(m.dim()));
    }
    const auto p = m.predict(x, mode);
    mp.means.push_back(p.mean);
    mp.variances.push_back(p.variance);
  }
  return mp;
}

}  // namespace subgp
