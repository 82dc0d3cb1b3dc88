#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "subgp/catalog.hpp"

namespace subgp {

inline constexpr double kPhiMin = 1e-3;
inline constexpr double kPhiMax = 1e3;
inline constexpr double kSigma2Min = 1e-8;
inline constexpr double kSigma2Max = 10.0;
// Factorization is tried without jitter first, then 1e-8, 1e-7, ..., 1e-4.
inline constexpr double kInitialJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-4;

/// Length-scales of the separable Gaussian correlation (in squared
/// unit-cube units) and the nugget variance.
struct GPHyperparams {
  std::vector<double> phi;
  double sigma2 = 0.05;

  /// True when every parameter lies inside its box constraint.
  bool in_bounds() const;
};

/// exp(-sum_p (x_p - x'_p)^2 / phi_p)
double kernel(std::span<const double> x, std::span<const double> xp, std::span<const double> phi);

/// Gaussian predictive distribution in standardized-y units.
struct GaussianPredictive {
  double mean = 0.0;
  double variance = 1.0;
};

/// Report the variance of the noisy response (adds sigma2) or of the latent
/// process.
enum class VarianceMode { Noisy, Latent };

/// Cholesky of C_n = K + (sigma2 + jitter) I. Jitter starts at 1e-8 and is
/// escalated tenfold up to 1e-4 until the factorization succeeds.
struct CovarianceFactor {
  Eigen::MatrixXd cov;  // K + (sigma2 + jitter) I
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  /// C^{-1} b with one step of iterative refinement.
  Vector solve(const Vector& b) const;
};

std::optional<CovarianceFactor> factorize(const GPHyperparams& h, const Matrix& X);

/// 0.5 log det C_n + 0.5 y' C_n^{-1} y + (m/2) log 2 pi. Returns +inf when
/// the covariance cannot be factorized even at the maximum jitter.
double neg_log_likelihood(const GPHyperparams& h, const Matrix& X, const Vector& y);

/// Parameters are (log phi_1..d, log sigma2).
struct LikelihoodEval {
  double value;
  Vector gradient;
};

/// Likelihood and its analytic gradient with respect to the log-parameters;
/// nullopt when the point is numerically infeasible.
std::optional<LikelihoodEval> neg_log_likelihood_with_gradient(const Vector& log_params,
                                                               const Matrix& X, const Vector& y);

GPHyperparams from_log_params(const Vector& log_params);
Vector to_log_params(const GPHyperparams& h);

/// A trained zero-mean GP with its cached factorization. Immutable once
/// built; predict() is safe to call concurrently.
class GPModel {
 public:
  /// Factorizes the covariance for the given data. Throws NumericalError if
  /// that fails at the maximum jitter.
  GPModel(GPHyperparams h, Matrix X, Vector y);

  const GPHyperparams& hyperparams() const { return hyper_; }
  const Matrix& inputs() const { return X_; }
  const Vector& responses() const { return y_; }
  const CovarianceFactor& factor() const { return factor_; }
  const Vector& alpha() const { return alpha_; }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }

  double neg_log_likelihood() const;
  GaussianPredictive predict(std::span<const double> x, VarianceMode mode = VarianceMode::Noisy) const;

 private:
  GPHyperparams hyper_;
  Matrix X_;
  Vector y_;
  CovarianceFactor factor_;
  Vector alpha_;
};

struct GPFitOptions {
  int starts = 5;
  std::uint64_t seed = 0;
  /// Stop when successive likelihood values change by less than this
  /// (relative to max(1, |NLL|)).
  double tolerance = 1e-8;
  int max_iterations = 300;
};

/// Maximum-likelihood fit over box-constrained log-parameters from several
/// starting points (one fixed, the rest quasi-random); keeps the best.
GPModel fit(const Matrix& X, const Vector& y, const GPFitOptions& opts = {});

}  // namespace subgp
