#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "subgp/random.hpp"

namespace subgp {

/// Equally weighted Gaussian mixture, one component per ensemble member.
struct MixturePredictive {
  std::vector<double> means;
  std::vector<double> variances;

  std::size_t size() const { return means.size(); }
  double mean() const;
  /// Mean of component variances plus variance of component means.
  double variance() const;
};

struct Interval {
  double lo;
  double hi;
};

/// Standard normal CDF.
double normal_cdf(double z);

double mixture_pdf(const MixturePredictive& mp, double y);
double mixture_cdf(const MixturePredictive& mp, double y);

/// [min_i mu_i - 8 sigma_i, max_i mu_i + 8 sigma_i]
Interval support_envelope(const MixturePredictive& mp);

/// Inverts the CDF by bisection on the support envelope to 1e-8.
/// Throws ConfigError unless 0 < q < 1.
double mixture_quantile(const MixturePredictive& mp, double q);

/// Evenly spaced evaluation grid over the support envelope.
struct DensityGrid {
  std::vector<double> y;
  std::vector<double> pdf;
};
inline constexpr std::size_t kDensityGridSize = 4096;
DensityGrid density_grid(const MixturePredictive& mp, std::size_t points = kDensityGridSize);

/// Highest-density region: the super-level set {y : pdf(y) >= t} whose
/// mixture probability matches `level` (threshold found by bisection).
/// Multimodal mixtures can yield several disjoint intervals.
std::vector<Interval> hpd_region(const MixturePredictive& mp, double level);

/// Mixture probability of a union of disjoint intervals.
double region_probability(const MixturePredictive& mp, const std::vector<Interval>& region);

/// n draws: a uniformly chosen component, then a Gaussian draw from it.
std::vector<double> sample_predictive(const MixturePredictive& mp, std::size_t n, Rng& rng);

}  // namespace subgp
