#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "subgp/error.hpp"
#include "subgp/mixture.hpp"
#include "subgp/random.hpp"

using namespace subgp;

namespace {

MixturePredictive random_mixture(Rng& rng, std::size_t k) {
  MixturePredictive mp;
  for (std::size_t i = 0; i < k; ++i) {
    mp.means.push_back(-3.0 + 6.0 * uniform01(rng));
    const double sd = 0.2 + 1.3 * uniform01(rng);
    mp.variances.push_back(sd * sd);
  }
  return mp;
}

/// Sampling written out independently of sample_predictive.
std::vector<double> monte_carlo(const MixturePredictive& mp, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, mp.size() - 1);
  std::normal_distribution<double> z;
  std::vector<double> out(n);
  for (auto& v : out) {
    const auto i = pick(rng);
    v = mp.means[i] + std::sqrt(mp.variances[i]) * z(rng);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double ecdf(const std::vector<double>& sorted, double y) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), y) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

}  // namespace

TEST(Mixture, DensityAtMidpointOfTwoComponents) {
  const MixturePredictive mp{{0.0, 4.0}, {1.0, 1.0}};
  const double phi2 = std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi);
  EXPECT_NEAR(mixture_pdf(mp, 2.0), phi2, 1e-15);
  EXPECT_NEAR(mixture_pdf(mp, 2.0), 0.05399, 1e-5);
}

TEST(Mixture, SymmetricCdfAndMedian) {
  const MixturePredictive mp{{0.0, 4.0}, {1.0, 1.0}};
  EXPECT_NEAR(mixture_cdf(mp, 2.0), 0.5, 1e-15);
  EXPECT_NEAR(mixture_quantile(mp, 0.5), 2.0, 1e-8);
}

TEST(Mixture, SingleComponentQuantiles) {
  const MixturePredictive mp{{1.5}, {0.25}};
  const boost::math::normal_distribution<double> n(1.5, 0.5);
  for (double q : {0.01, 0.05, 0.3, 0.5, 0.9, 0.999}) {
    EXPECT_NEAR(mixture_quantile(mp, q), boost::math::quantile(n, q), 1e-8) << q;
  }
}

TEST(Mixture, QuantileLevelValidated) {
  const MixturePredictive mp{{0.0}, {1.0}};
  EXPECT_THROW(mixture_quantile(mp, 0.0), ConfigError);
  EXPECT_THROW(mixture_quantile(mp, 1.0), ConfigError);
  EXPECT_THROW(hpd_region(mp, 1.0), ConfigError);
}

TEST(Mixture, ThreeComponentQuantilesMatchMonteCarlo) {
  const MixturePredictive mp{{-1.0, 0.5, 2.5}, {0.64, 0.25, 1.0}};
  const auto s = monte_carlo(mp, 1000000, 1);
  for (double q : {0.25, 0.5, 0.75}) {
    const double empirical = s[static_cast<std::size_t>(q * static_cast<double>(s.size()))];
    EXPECT_NEAR(mixture_quantile(mp, q), empirical, 5e-3) << q;
  }
}

TEST(Mixture, CdfProperties) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const MixturePredictive mp = random_mixture(rng, 1 + t % 8);
    double prev = 0.0;
    for (double y = -20.0; y <= 20.0; y += 0.05) {
      const double c = mixture_cdf(mp, y);
      EXPECT_GE(c, prev);
      prev = c;
    }
    EXPECT_LT(mixture_cdf(mp, -1e3), 1e-12);
    EXPECT_GT(mixture_cdf(mp, 1e3), 1.0 - 1e-12);
    for (double q = 0.02; q < 0.99; q += 0.04) {
      EXPECT_NEAR(mixture_cdf(mp, mixture_quantile(mp, q)), q, 1e-6);
    }
  }
}

TEST(Mixture, MeanIsAverageOfComponentMeans) {
  const MixturePredictive mp{{0.25, 0.5, 2.0, -0.75}, {1.0, 2.0, 0.5, 0.1}};
  EXPECT_EQ(mp.mean(), (0.25 + 0.5 + 2.0 - 0.75) / 4.0);
  EXPECT_NEAR(mp.variance(), (1.0 + 2.0 + 0.5 + 0.1) / 4.0 +
                                 (0.25 * 0.25 + 0.0 + 1.5 * 1.5 + 1.25 * 1.25) / 4.0,
              1e-14);
}

TEST(Hpd, StandardNormal) {
  const MixturePredictive mp{{0.0}, {1.0}};
  const auto r = hpd_region(mp, 0.9);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0].lo, -1.6449, 1e-3);
  EXPECT_NEAR(r[0].hi, 1.6449, 1e-3);
  EXPECT_NEAR(region_probability(mp, r), 0.9, 1e-4);
}

TEST(Hpd, SeparatedModesGiveTwoIntervals) {
  const MixturePredictive mp{{0.0, 10.0}, {1.0, 1.0}};
  const auto r = hpd_region(mp, 0.9);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_LT(r[0].hi, 5.0);
  EXPECT_GT(r[1].lo, 5.0);
}

TEST(Hpd, RegionProbabilityMatchesMonteCarlo) {
  const MixturePredictive mp{{-2.0, -0.5, 1.0, 3.5}, {0.3, 0.8, 0.2, 1.2}};
  const auto r = hpd_region(mp, 0.8);
  const auto s = monte_carlo(mp, 1000000, 3);
  double inside = 0.0;
  for (const auto& iv : r) inside += ecdf(s, iv.hi) - ecdf(s, iv.lo);
  EXPECT_NEAR(region_probability(mp, r), inside, 5e-3);
}

TEST(Hpd, LevelReachedForRandomMixtures) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    const MixturePredictive mp = random_mixture(rng, 1 + t % 8);
    for (double level : {0.5, 0.9, 0.95}) {
      const auto r = hpd_region(mp, level);
      EXPECT_NEAR(region_probability(mp, r), level, 1e-4);
      for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LT(r[k - 1].hi, r[k].lo);
    }
  }
}

TEST(Hpd, ShorterThanCentralIntervalForSkewedMixture) {
  const MixturePredictive mp{{0.0, 0.3, 3.0}, {0.1, 0.1, 2.0}};
  const auto r = hpd_region(mp, 0.9);
  double length = 0.0;
  for (const auto& iv : r) length += iv.hi - iv.lo;
  EXPECT_LT(length, mixture_quantile(mp, 0.95) - mixture_quantile(mp, 0.05));
}

TEST(SamplePredictive, MeanOfTwoComponentMixture) {
  const MixturePredictive mp{{0.0, 4.0}, {1.0, 1.0}};
  Rng rng(5);
  const auto s = sample_predictive(mp, 1000000, rng);
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  EXPECT_NEAR(mean, 2.0, 0.01);
}

TEST(SamplePredictive, ReproducibleStream) {
  const MixturePredictive mp{{0.0, 4.0}, {1.0, 0.5}};
  Rng a(6);
  Rng b(6);
  EXPECT_EQ(sample_predictive(mp, 100, a), sample_predictive(mp, 100, b));
}

TEST(SamplePredictive, EmpiricalCdfConverges) {
  const MixturePredictive mp{{-1.0, 2.0, 2.5}, {0.5, 0.2, 1.0}};
  Rng rng(7);
  auto s = sample_predictive(mp, 200000, rng);
  std::sort(s.begin(), s.end());
  double sup = 0.0;
  for (double y = -5.0; y <= 6.0; y += 0.01) sup = std::max(sup, std::abs(ecdf(s, y) - mixture_cdf(mp, y)));
  EXPECT_LT(sup, 5e-3);
}

TEST(DensityGrid, SpansEnvelope) {
  const MixturePredictive mp{{0.0, 2.0}, {1.0, 0.25}};
  const auto g = density_grid(mp);
  ASSERT_EQ(g.y.size(), kDensityGridSize);
  EXPECT_DOUBLE_EQ(g.y.front(), -8.0);
  EXPECT_DOUBLE_EQ(g.y.back(), 8.0);
}
