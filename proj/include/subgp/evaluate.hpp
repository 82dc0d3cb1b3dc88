#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "subgp/catalog.hpp"
#include "subgp/ensemble.hpp"
#include "subgp/mixture.hpp"

namespace subgp {

inline constexpr std::size_t kPitBins = 20;

struct PITResult {
  std::vector<double> values;
  std::vector<std::size_t> histogram;
  double chi2 = 0.0;
  double p_value = 1.0;
};

/// Mixture predictive at every row of `test`, evaluated in parallel.
std::vector<MixturePredictive> predict_all(const EnsembleModel& model, const Catalog& test,
                                           VarianceMode mode = VarianceMode::Noisy,
                                           unsigned threads = 1);

/// Histogram and chi-square uniformity test of precomputed PIT values.
PITResult pit_from_values(std::vector<double> values, std::size_t bins = kPitBins);

/// PIT of each observed y under its predictive.
PITResult pit(std::span<const MixturePredictive> predictives, const Vector& y);
PITResult pit(const EnsembleModel& model, const Catalog& test,
              VarianceMode mode = VarianceMode::Noisy, unsigned threads = 1);

/// Fraction of y inside the central interval [q_{(1-level)/2}, q_{(1+level)/2}].
double coverage(std::span<const MixturePredictive> predictives, const Vector& y, double level);
double coverage(const EnsembleModel& model, const Catalog& test, double level,
                VarianceMode mode = VarianceMode::Noisy, unsigned threads = 1);

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// the uniform distribution on [0,1].
double ks_uniform(std::vector<double> values);

struct PointErrors {
  double rmse = 0.0;
  double mae = 0.0;
};

/// Errors of the predictive median against y.
PointErrors median_errors(std::span<const MixturePredictive> predictives, const Vector& y);

using LatentFunction = std::function<double(std::span<const double>)>;

struct SyntheticSpec {
  std::vector<LatentFunction> branches;
  std::vector<double> weights;
  double noise_sd = 0.1;  // raw units
  std::size_t n = 1000;
  std::size_t dim = 1;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  /// X uniform on [0,1]^d; y standardized. transform maps y back to raw units.
  Catalog catalog;
  std::vector<std::size_t> branch;
};

/// Throws ConfigError unless the weights sum to 1 within 1e-12.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// sin(2 pi x1) and sin(2 pi x1) + 3 with equal weights.
SyntheticSpec two_branch_spec(std::size_t n, std::uint64_t seed, double noise_sd = 0.1,
                              std::size_t dim = 1);

/// Single zero branch with unit noise.
SyntheticSpec pure_noise_spec(std::size_t n, std::uint64_t seed, std::size_t dim = 1);

/// True conditional density of a synthetic spec with equal branch weights,
/// expressed in the standardized units of `transform`.
MixturePredictive synthetic_truth(const SyntheticSpec& spec, const NormalizationState& transform,
                                  std::span<const double> x);

struct ModeThresholds {
  double min_separation = 0.5;
  double min_prominence = 1.2;
};

/// Number of modes of the mixture density on the 4096-point grid. Adjacent
/// local maxima closer than min_separation, or whose lower peak is less than
/// min_prominence times the saddle density between them, are merged.
std::size_t mode_count(const MixturePredictive& mp, ModeThresholds thresholds = {});

}  // namespace subgp
