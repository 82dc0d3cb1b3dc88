#include "subgp/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "subgp/error.hpp"

namespace subgp {

double MixturePredictive::mean() const {
  double s = 0.0;
  for (double m : means) s += m;
  return s / static_cast<double>(size());
}

double MixturePredictive::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double dm = means[i] - mu;
    s += variances[i] + dm * dm;
  }
  return s / static_cast<double>(size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double mixture_pdf(const MixturePredictive& mp, double y) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double s = 0.0;
  for (std::size_t i = 0; i < mp.size(); ++i) {
    const double sd = std::sqrt(mp.variances[i]);
    const double z = (y - mp.means[i]) / sd;
    s += kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
  }
  return s / static_cast<double>(mp.size());
}

double mixture_cdf(const MixturePredictive& mp, double y) {
  double s = 0.0;
  for (std::size_t i = 0; i < mp.size(); ++i) {
    s += normal_cdf((y - mp.means[i]) / std::sqrt(mp.variances[i]));
  }
  return s / static_cast<double>(mp.size());
}

Interval support_envelope(const MixturePredictive& mp) {
  Interval e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < mp.size(); ++i) {
    const double sd = std::sqrt(mp.variances[i]);
    e.lo = std::min(e.lo, mp.means[i] - 8.0 * sd);
    e.hi = std::max(e.hi, mp.means[i] + 8.0 * sd);
  }
  return e;
}

double mixture_quantile(const MixturePredictive& mp, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ConfigError("quantile level must lie in (0,1), got " + std::to_string(q));
  }
  auto [lo, hi] = support_envelope(mp);
  // Tail levels beyond 8 sd: widen until the bracket holds.
  while (mixture_cdf(mp, lo) > q) lo -= (hi - lo);
  while (mixture_cdf(mp, hi) < q) hi += (hi - lo);
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mixture_cdf(mp, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DensityGrid density_grid(const MixturePredictive& mp, std::size_t points) {
  const auto [lo, hi] = support_envelope(mp);
  DensityGrid g;
  g.y.resize(points);
  g.pdf.resize(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    g.y[k] = k + 1 == points ? hi : lo + step * static_cast<double>(k);
    g.pdf[k] = mixture_pdf(mp, g.y[k]);
  }
  return g;
}

double region_probability(const MixturePredictive& mp, const std::vector<Interval>& region) {
  double p = 0.0;
  for (const auto& iv : region) p += mixture_cdf(mp, iv.hi) - mixture_cdf(mp, iv.lo);
  return p;
}

namespace {

/// Super-level set of the gridded density at threshold t; interval ends are
/// placed by linear interpolation between the grid nodes that straddle t.
std::vector<Interval> superlevel_set(const DensityGrid& g, double t) {
  std::vector<Interval> out;
  const std::size_t n = g.y.size();
  auto crossing = [&](std::size_t a, std::size_t b) {
    const double fa = g.pdf[a];
    const double fb = g.pdf[b];
    if (fa == fb) return g.y[b];
    return g.y[a] + (t - fa) / (fb - fa) * (g.y[b] - g.y[a]);
  };
  std::size_t k = 0;
  while (k < n) {
    if (g.pdf[k] < t) {
      ++k;
      continue;
    }
    const double lo = k == 0 ? g.y[0] : crossing(k - 1, k);
    std::size_t e = k;
    while (e + 1 < n && g.pdf[e + 1] >= t) ++e;
    const double hi = e + 1 == n ? g.y[n - 1] : crossing(e, e + 1);
    out.push_back({lo, hi});
    k = e + 1;
  }
  return out;
}

}  // namespace

std::vector<Interval> hpd_region(const MixturePredictive& mp, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("HPD level must lie in (0,1), got " + std::to_string(level));
  }
  const DensityGrid g = density_grid(mp);
  double t_lo = 0.0;  // region probability >= level
  double t_hi = *std::max_element(g.pdf.begin(), g.pdf.end());
  std::vector<Interval> best = superlevel_set(g, t_lo);
  for (int iter = 0; iter < 60; ++iter) {
    const double t = 0.5 * (t_lo + t_hi);
    auto region = superlevel_set(g, t);
    const double p = region_probability(mp, region);
    if (p >= level) {
      t_lo = t;
      best = std::move(region);
      if (p - level < 1e-6) break;
    } else {
      t_hi = t;
    }
  }
  return best;
}

std::vector<double> sample_predictive(const MixturePredictive& mp, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  const auto k = static_cast<double>(mp.size());
  for (auto& v : out) {
    const auto i = std::min(mp.size() - 1, static_cast<std::size_t>(uniform01(rng) * k));
    v = mp.means[i] + std::sqrt(mp.variances[i]) * standard_normal(rng);
  }
  return out;
}

}  // namespace subgp
