#include "subgp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "subgp/error.hpp"
#include "subgp/parallel.hpp"
#include "subgp/random.hpp"

namespace subgp {

std::vector<MixturePredictive> predict_all(const EnsembleModel& model, const Catalog& test,
                                           VarianceMode mode, unsigned threads) {
  std::vector<MixturePredictive> out(test.size());
  parallel_for(test.size(), threads,
               [&](std::size_t j) { out[j] = predictive(model, test.row(j), mode); });
  return out;
}

PITResult pit_from_values(std::vector<double> values, std::size_t bins) {
  PITResult r;
  r.histogram.assign(bins, 0);
  for (double& v : values) {
    v = std::clamp(v, 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    ++r.histogram[b];
  }
  const double expected = static_cast<double>(values.size()) / static_cast<double>(bins);
  if (expected > 0.0) {
    for (auto c : r.histogram) {
      const double d = static_cast<double>(c) - expected;
      r.chi2 += d * d / expected;
    }
    r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(bins - 1), 0.5 * r.chi2);
  }
  r.values = std::move(values);
  return r;
}

PITResult pit(std::span<const MixturePredictive> predictives, const Vector& y) {
  std::vector<double> v(predictives.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = mixture_cdf(predictives[j], y(static_cast<Eigen::Index>(j)));
  }
  return pit_from_values(std::move(v));
}

PITResult pit(const EnsembleModel& model, const Catalog& test, VarianceMode mode, unsigned threads) {
  if (test.empty()) throw ConfigError("PIT needs a nonempty test set");
  const auto preds = predict_all(model, test, mode, threads);
  return pit(preds, test.y);
}

double coverage(std::span<const MixturePredictive> predictives, const Vector& y, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("coverage level must lie in (0,1), got " + std::to_string(level));
  }
  if (predictives.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t j = 0; j < predictives.size(); ++j) {
    const double lo = mixture_quantile(predictives[j], 0.5 * (1.0 - level));
    const double hi = mixture_quantile(predictives[j], 0.5 * (1.0 + level));
    const double v = y(static_cast<Eigen::Index>(j));
    if (v >= lo && v <= hi) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(predictives.size());
}

double coverage(const EnsembleModel& model, const Catalog& test, double level, VarianceMode mode,
                unsigned threads) {
  const auto preds = predict_all(model, test, mode, threads);
  return coverage(preds, test.y, level);
}

double ks_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

PointErrors median_errors(std::span<const MixturePredictive> predictives, const Vector& y) {
  PointErrors e;
  if (predictives.empty()) return e;
  double sq = 0.0;
  double ab = 0.0;
  for (std::size_t j = 0; j < predictives.size(); ++j) {
    const double r = mixture_quantile(predictives[j], 0.5) - y(static_cast<Eigen::Index>(j));
    sq += r * r;
    ab += std::abs(r);
  }
  const auto n = static_cast<double>(predictives.size());
  e.rmse = std::sqrt(sq / n);
  e.mae = ab / n;
  return e;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.branches.empty() || spec.branches.size() != spec.weights.size()) {
    throw ConfigError("synthetic spec needs one weight per branch");
  }
  const double wsum = std::accumulate(spec.weights.begin(), spec.weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw ConfigError("synthetic branch weights must sum to 1, got " + std::to_string(wsum));
  }
  if (spec.n < 2 || spec.dim < 1) throw ConfigError("synthetic spec needs n >= 2 and dim >= 1");

  Rng rng(spec.seed);
  SyntheticData out;
  Catalog& cat = out.catalog;
  cat.X.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.dim));
  cat.y.resize(static_cast<Eigen::Index>(spec.n));
  cat.source_rows.resize(spec.n);
  out.branch.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t p = 0; p < spec.dim; ++p) cat.X(r, static_cast<Eigen::Index>(p)) = uniform01(rng);
    const double u = uniform01(rng);
    std::size_t b = 0;
    double acc = spec.weights[0];
    while (u >= acc && b + 1 < spec.weights.size()) acc += spec.weights[++b];
    out.branch[i] = b;
    cat.y(r) = spec.branches[b](cat.row(i)) + spec.noise_sd * standard_normal(rng);
    cat.source_rows[i] = i;
  }
  const double mean = cat.y.mean();
  const double sd = std::sqrt((cat.y.array() - mean).square().mean());
  if (!(sd > 0.0)) throw DataError("synthetic responses have zero spread");
  cat.y = (cat.y.array() - mean) / sd;
  cat.transform = NormalizationState::identity(spec.dim);
  cat.transform.response_mean = mean;
  cat.transform.response_sd = sd;
  return out;
}

SyntheticSpec two_branch_spec(std::size_t n, std::uint64_t seed, double noise_sd, std::size_t dim) {
  SyntheticSpec s;
  s.branches = {
      [](std::span<const double> x) { return std::sin(2.0 * std::numbers::pi * x[0]); },
      [](std::span<const double> x) { return std::sin(2.0 * std::numbers::pi * x[0]) + 3.0; },
  };
  s.weights = {0.5, 0.5};
  s.noise_sd = noise_sd;
  s.n = n;
  s.dim = dim;
  s.seed = seed;
  return s;
}

SyntheticSpec pure_noise_spec(std::size_t n, std::uint64_t seed, std::size_t dim) {
  SyntheticSpec s;
  s.branches = {[](std::span<const double>) { return 0.0; }};
  s.weights = {1.0};
  s.noise_sd = 1.0;
  s.n = n;
  s.dim = dim;
  s.seed = seed;
  return s;
}

MixturePredictive synthetic_truth(const SyntheticSpec& spec, const NormalizationState& transform,
                                  std::span<const double> x) {
  const double w0 = spec.weights.front();
  for (double w : spec.weights) {
    if (std::abs(w - w0) > 1e-12) throw ConfigError("synthetic_truth needs equal branch weights");
  }
  MixturePredictive mp;
  const double sd = spec.noise_sd / transform.response_sd;
  for (const auto& f : spec.branches) {
    mp.means.push_back((f(x) - transform.response_mean) / transform.response_sd);
    mp.variances.push_back(sd * sd);
  }
  return mp;
}

std::size_t mode_count(const MixturePredictive& mp, ModeThresholds thresholds) {
  if (!(thresholds.min_separation > 0.0 && thresholds.min_prominence > 0.0)) {
    throw ConfigError("mode thresholds must be positive");
  }
  const DensityGrid g = density_grid(mp);
  const std::size_t n = g.y.size();

  // Local maxima; a plateau counts once, at its first node.
  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < n; ++k) {
    const bool left_ok = k == 0 || g.pdf[k] > g.pdf[k - 1];
    if (!left_ok) continue;
    std::size_t e = k;
    while (e + 1 < n && g.pdf[e + 1] == g.pdf[k]) ++e;
    const bool right_ok = e + 1 == n || g.pdf[e + 1] < g.pdf[k];
    if (right_ok && g.pdf[k] > 0.0) peaks.push_back(k);
    k = e;
  }

  auto saddle = [&](std::size_t a, std::size_t b) {
    return *std::min_element(g.pdf.begin() + static_cast<std::ptrdiff_t>(a),
                             g.pdf.begin() + static_cast<std::ptrdiff_t>(b) + 1);
  };

  // Repeatedly merge the weakest failing adjacent pair into its higher peak.
  for (;;) {
    std::size_t worst = peaks.size();
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
      const std::size_t a = peaks[i];
      const std::size_t b = peaks[i + 1];
      const double s = saddle(a, b);
      const double lower_peak = std::min(g.pdf[a], g.pdf[b]);
      const double ratio = s > 0.0 ? lower_peak / s : std::numeric_limits<double>::infinity();
      const bool fails =
          g.y[b] - g.y[a] < thresholds.min_separation || ratio < thresholds.min_prominence;
      if (fails && (worst == peaks.size() || ratio < worst_ratio)) {
        worst = i;
        worst_ratio = ratio;
      }
    }
    if (worst == peaks.size()) break;
    const std::size_t drop = g.pdf[peaks[worst]] < g.pdf[peaks[worst + 1]] ? worst : worst + 1;
    peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return peaks.size();
}

}  // namespace subgp
