#include "subgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "subgp/error.hpp"
#include "subgp/random.hpp"

namespace subgp {

bool GPHyperparams::in_bounds() const {
  for (double p : phi) {
    if (!(p >= kPhiMin && p <= kPhiMax)) return false;
  }
  return sigma2 >= kSigma2Min && sigma2 <= kSigma2Max;
}

double kernel(std::span<const double> x, std::span<const double> xp, std::span<const double> phi) {
  double s = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double d = x[p] - xp[p];
    s += d * d / phi[p];
  }
  return std::exp(-s);
}

namespace {

Eigen::MatrixXd correlation_matrix(const Matrix& X, std::span<const double> phi) {
  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index p = 0; p < d; ++p) {
        const double diff = X(i, p) - X(j, p);
        s += diff * diff / phi[static_cast<std::size_t>(p)];
      }
      K(i, j) = K(j, i) = std::exp(-s);
    }
  }
  return K;
}

std::optional<CovarianceFactor> factorize_correlation(const Eigen::MatrixXd& K, double sigma2) {
  const Eigen::Index m = K.rows();
  // Pivots below this are rounding noise; treat the matrix as singular.
  const double floor = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * (1.0 + sigma2);
  std::vector<double> ladder{0.0};
  for (double j = kInitialJitter; j <= kMaxJitter * (1.0 + 1e-9); j *= 10.0) ladder.push_back(j);
  for (double jitter : ladder) {
    Eigen::MatrixXd C = K;
    C.diagonal().array() += sigma2 + jitter;
    CovarianceFactor f{C, Eigen::LLT<Eigen::MatrixXd>(C), jitter};
    if (f.llt.info() != Eigen::Success) continue;
    const auto diag = f.llt.matrixLLT().diagonal();
    bool ok = true;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(diag(i) * diag(i) > floor) || !std::isfinite(diag(i))) ok = false;
    }
    if (ok) return f;
  }
  return std::nullopt;
}

}  // namespace

Vector CovarianceFactor::solve(const Vector& b) const {
  Vector x = llt.solve(b);
  const Vector r = b - cov * x;
  x += llt.solve(r);
  return x;
}

namespace {

double half_log_det(const CovarianceFactor& f) {
  return f.llt.matrixLLT().diagonal().array().log().sum();
}

double nll_from_factor(const CovarianceFactor& f, const Vector& y, const Vector& alpha) {
  const double m = static_cast<double>(y.size());
  return half_log_det(f) + 0.5 * y.dot(alpha) + 0.5 * m * std::log(2.0 * std::numbers::pi);
}

}  // namespace

std::optional<CovarianceFactor> factorize(const GPHyperparams& h, const Matrix& X) {
  return factorize_correlation(correlation_matrix(X, h.phi), h.sigma2);
}

double neg_log_likelihood(const GPHyperparams& h, const Matrix& X, const Vector& y) {
  const auto f = factorize(h, X);
  if (!f) return std::numeric_limits<double>::infinity();
  const Vector alpha = f->solve(y);
  return nll_from_factor(*f, y, alpha);
}

GPHyperparams from_log_params(const Vector& log_params) {
  GPHyperparams h;
  const Eigen::Index d = log_params.size() - 1;
  h.phi.resize(static_cast<std::size_t>(d));
  // exp(log(b)) can land an ulp outside the box.
  for (Eigen::Index p = 0; p < d; ++p) {
    h.phi[static_cast<std::size_t>(p)] = std::clamp(std::exp(log_params(p)), kPhiMin, kPhiMax);
  }
  h.sigma2 = std::clamp(std::exp(log_params(d)), kSigma2Min, kSigma2Max);
  return h;
}

Vector to_log_params(const GPHyperparams& h) {
  Vector t(static_cast<Eigen::Index>(h.phi.size()) + 1);
  for (std::size_t p = 0; p < h.phi.size(); ++p) t(static_cast<Eigen::Index>(p)) = std::log(h.phi[p]);
  t(t.size() - 1) = std::log(h.sigma2);
  return t;
}

std::optional<LikelihoodEval> neg_log_likelihood_with_gradient(const Vector& log_params,
                                                               const Matrix& X, const Vector& y) {
  const GPHyperparams h = from_log_params(log_params);
  const Eigen::MatrixXd K = correlation_matrix(X, h.phi);
  const auto f = factorize_correlation(K, h.sigma2);
  if (!f) return std::nullopt;
  const Vector alpha = f->solve(y);
  LikelihoodEval out{nll_from_factor(*f, y, alpha), Vector::Zero(log_params.size())};
  if (!std::isfinite(out.value)) return std::nullopt;

  // d NLL / d theta = 0.5 tr(W dC/dtheta), W = C^{-1} - alpha alpha'.
  const Eigen::Index m = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd W = f->llt.solve(Eigen::MatrixXd::Identity(m, m));
  W.noalias() -= alpha * alpha.transpose();
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double wk = W(i, j) * K(i, j);
      for (Eigen::Index p = 0; p < d; ++p) {
        const double diff = X(i, p) - X(j, p);
        out.gradient(p) += wk * diff * diff;
      }
    }
  }
  for (Eigen::Index p = 0; p < d; ++p) out.gradient(p) /= h.phi[static_cast<std::size_t>(p)];
  out.gradient(d) = 0.5 * h.sigma2 * W.trace();
  if (!out.gradient.allFinite()) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------

GPModel::GPModel(GPHyperparams h, Matrix X, Vector y)
    : hyper_(std::move(h)), X_(std::move(X)), y_(std::move(y)) {
  if (static_cast<std::size_t>(X_.cols()) != hyper_.phi.size()) {
    throw ConfigError("GP: length-scale count does not match input dimension");
  }
  if (X_.rows() != y_.size()) throw ConfigError("GP: input and response sizes differ");
  auto f = factorize(hyper_, X_);
  if (!f) {
    throw NumericalError("GP: covariance factorization failed at maximum jitter " +
                         std::to_string(kMaxJitter));
  }
  factor_ = std::move(*f);
  alpha_ = factor_.solve(y_);
}

double GPModel::neg_log_likelihood() const { return nll_from_factor(factor_, y_, alpha_); }

GaussianPredictive GPModel::predict(std::span<const double> x, VarianceMode mode) const {
  const Eigen::Index m = X_.rows();
  Vector c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    c(i) = kernel(x, {X_.data() + i * X_.cols(), static_cast<std::size_t>(X_.cols())}, hyper_.phi);
  }
  GaussianPredictive out;
  out.mean = c.dot(alpha_);
  const Vector v = factor_.llt.matrixL().solve(c);
  double var = 1.0 - v.squaredNorm();
  if (mode == VarianceMode::Noisy) var += hyper_.sigma2;
  out.variance = std::max(var, 1e-12);
  return out;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Box {
  Vector lower;
  Vector upper;
  Vector project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

Box parameter_box(Eigen::Index d) {
  Box b{Vector(d + 1), Vector(d + 1)};
  b.lower.head(d).setConstant(std::log(kPhiMin));
  b.upper.head(d).setConstant(std::log(kPhiMax));
  b.lower(d) = std::log(kSigma2Min);
  b.upper(d) = std::log(kSigma2Max);
  return b;
}

struct OptimResult {
  Vector x;
  double value;
};

/// Projected L-BFGS with backtracking on the projected path. Variables held
/// at a bound by the gradient are frozen for the step.
template <typename Objective>
std::optional<OptimResult> minimize_box(const Objective& objective, Vector x, const Box& box,
                                        double tolerance, int max_iterations) {
  constexpr std::size_t kHistory = 8;
  x = box.project(x);
  auto cur = objective(x);
  if (!cur) return std::nullopt;
  std::deque<std::pair<Vector, Vector>> history;  // (s, y)
  int small_steps = 0;
  const Eigen::Index n = x.size();

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Vector& g = cur->gradient;
    Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = x(i) <= box.lower(i) && g(i) > 0.0;
      const bool at_hi = x(i) >= box.upper(i) && g(i) < 0.0;
      free(i) = !(at_lo || at_hi);
    }
    Vector gf = free.select(g, 0.0);
    if (gf.lpNorm<Eigen::Infinity>() < 1e-9) break;

    // Two-loop recursion on the free subspace.
    Vector q = gf;
    std::vector<double> a(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      const auto& [s, yv] = history[k];
      a[k] = s.dot(q) / yv.dot(s);
      q -= a[k] * yv;
    }
    if (!history.empty()) {
      const auto& [s, yv] = history.back();
      q *= s.dot(yv) / yv.squaredNorm();
    } else {
      q /= std::max(1.0, gf.norm());
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& [s, yv] = history[k];
      const double b = yv.dot(q) / yv.dot(s);
      q += (a[k] - b) * s;
    }
    Vector dir = free.select(-q, 0.0);
    if (dir.dot(gf) >= 0.0) {
      history.clear();
      dir = -gf / std::max(1.0, gf.norm());
    }

    std::optional<LikelihoodEval> next;
    Vector xn;
    double step = 1.0;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      xn = box.project(x + step * dir);
      if ((xn - x).lpNorm<Eigen::Infinity>() < 1e-14) break;
      auto trial = objective(xn);
      if (trial && trial->value <= cur->value + 1e-4 * g.dot(xn - x)) {
        next = std::move(trial);
        break;
      }
    }
    if (!next) {
      if (history.empty()) break;
      history.clear();
      continue;
    }
    const Vector s = xn - x;
    const Vector yv = next->gradient - g;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      history.emplace_back(s, yv);
      if (history.size() > kHistory) history.pop_front();
    }
    const double decrease = cur->value - next->value;
    x = xn;
    cur = std::move(next);
    if (decrease < tolerance * std::max(1.0, std::abs(cur->value))) {
      if (++small_steps >= 2) break;
    } else {
      small_steps = 0;
    }
  }
  return OptimResult{x, cur->value};
}

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

std::string describe_pathology(const Matrix& X, const Vector& y) {
  if (!X.allFinite() || !y.allFinite()) return "non-finite inputs or responses";
  std::set<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> r(X.row(i).data(), X.row(i).data() + X.cols());
    if (!rows.insert(r).second) return "duplicate input rows make the covariance singular";
  }
  if ((y.array() == y(0)).all()) return "constant responses";
  return "covariance ill-conditioned at every start";
}

}  // namespace

GPModel fit(const Matrix& X, const Vector& y, const GPFitOptions& opts) {
  const Eigen::Index d = X.cols();
  if (X.rows() < 2) throw ConfigError("GP fit needs at least 2 points");
  if (X.rows() != y.size()) throw ConfigError("GP fit: input and response sizes differ");
  if (d < 1) throw ConfigError("GP fit: zero-dimensional inputs");
  if (opts.starts < 1) throw ConfigError("GP fit: need at least one start");
  if (!X.allFinite() || !y.allFinite()) {
    throw NumericalError("GP fit failed: non-finite inputs or responses");
  }
  if (d + 1 > static_cast<Eigen::Index>(std::size(kPrimes))) {
    throw ConfigError("GP fit: input dimension too large for the quasi-random start design");
  }
  const Box box = parameter_box(d);

  std::vector<Vector> starts;
  Vector first(d + 1);
  first.head(d).setConstant(std::log(std::clamp(0.1 * static_cast<double>(d), kPhiMin, kPhiMax)));
  first(d) = std::log(0.05);
  starts.push_back(first);
  // Halton points with a seeded Cranley-Patterson shift.
  Rng rng(opts.seed);
  Vector shift(d + 1);
  for (Eigen::Index k = 0; k <= d; ++k) shift(k) = uniform01(rng);
  for (int s = 1; s < opts.starts; ++s) {
    Vector t(d + 1);
    for (Eigen::Index k = 0; k <= d; ++k) {
      double u = radical_inverse(static_cast<std::size_t>(s), kPrimes[k]) + shift(k);
      u -= std::floor(u);
      t(k) = box.lower(k) + u * (box.upper(k) - box.lower(k));
    }
    starts.push_back(t);
  }

  auto objective = [&](const Vector& t) { return neg_log_likelihood_with_gradient(t, X, y); };
  std::optional<OptimResult> best;
  for (const auto& s : starts) {
    auto r = minimize_box(objective, s, box, opts.tolerance, opts.max_iterations);
    if (r && (!best || r->value < best->value)) best = std::move(r);
  }
  if (!best) {
    throw NumericalError("GP fit failed: every start was numerically infeasible (" +
                         describe_pathology(X, y) + ")");
  }
  return GPModel(from_log_params(best->x), X, y);
}

}  // namespace subgp
