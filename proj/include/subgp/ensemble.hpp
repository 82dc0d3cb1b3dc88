#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "subgp/catalog.hpp"
#include "subgp/gp.hpp"
#include "subgp/mixture.hpp"
#include "subgp/partition.hpp"
#include "subgp/sampler.hpp"

namespace subgp {

struct EnsembleOptions {
  std::size_t members = 50;
  /// sampler.seed is the base seed; member i uses member_seed(base, i).
  SamplerConfig sampler;
  GPFitOptions gp;
  unsigned threads = 1;
  bool record_traces = false;
};

struct EnsembleModel {
  std::vector<GPModel> members;
  /// Seed each member was finally trained with (differs from the stream
  /// seed when the first attempt failed and was retried).
  std::vector<std::uint64_t> seeds;
  /// Subsample behind each member (per cell: chosen catalog index).
  std::vector<SubsampleDraw> draws;
  EnsembleOptions options;
  CardinalityBounds bounds;

  std::size_t size() const { return members.size(); }
  std::size_t dim() const { return members.empty() ? 0 : members.front().dim(); }
};

/// Trains options.members GPs, each on its own conditional subsample of the
/// catalog, in parallel over options.threads workers. Results depend only on
/// the seeds, not on the thread count.
EnsembleModel train_ensemble(const Catalog& cat, const Partitioning& part,
                             const PartitionGraph& graph, const EnsembleOptions& options);

/// Trains a single member on the draw for the given stream seed.
GPModel train_member(const Catalog& cat, const Partitioning& part, const VisitPlan& plan,
                     double eta, std::uint64_t seed, const GPFitOptions& gp, SubsampleDraw* draw_out = nullptr,
                     bool record_trace = false);

/// One mixture component per member at query point x.
MixturePredictive predictive(std::span<const GPModel> members, std::span<const double> x,
                             VarianceMode mode = VarianceMode::Noisy);

inline MixturePredictive predictive(const EnsembleModel& model, std::span<const double> x,
                                    VarianceMode mode = VarianceMode::Noisy) {
  return predictive(std::span<const GPModel>(model.members), x, mode);
}

}  // namespace subgp
