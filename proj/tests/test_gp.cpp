#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "subgp/error.hpp"
#include "subgp/gp.hpp"
#include "subgp/random.hpp"

using namespace subgp;

namespace {

struct Instance {
  Matrix X;
  Vector y;
  GPHyperparams h;
};

Instance random_instance(Rng& rng, std::size_t m, std::size_t d, double phi_lo, double phi_hi,
                         double s2_lo, double s2_hi) {
  Instance in;
  in.X.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  in.y.resize(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < in.X.rows(); ++i) {
    for (Eigen::Index p = 0; p < in.X.cols(); ++p) in.X(i, p) = uniform01(rng);
    in.y(i) = standard_normal(rng);
  }
  for (std::size_t p = 0; p < d; ++p) {
    in.h.phi.push_back(std::exp(std::log(phi_lo) + uniform01(rng) * std::log(phi_hi / phi_lo)));
  }
  in.h.sigma2 = std::exp(std::log(s2_lo) + uniform01(rng) * std::log(s2_hi / s2_lo));
  return in;
}

/// Dense covariance with an explicit jitter, built entry by entry.
Eigen::MatrixXd dense_covariance(const Instance& in, double jitter) {
  const Eigen::Index m = in.X.rows();
  Eigen::MatrixXd C(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Eigen::Index p = 0; p < in.X.cols(); ++p) {
        const double diff = in.X(i, p) - in.X(j, p);
        s += diff * diff / in.h.phi[static_cast<std::size_t>(p)];
      }
      C(i, j) = std::exp(-s) + (i == j ? in.h.sigma2 + jitter : 0.0);
    }
  }
  return C;
}

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Extended-precision LU on the same double entries.
double oracle_nll(const Instance& in, double jitter) {
  const Eigen::FullPivLU<LongMatrix> lu(dense_covariance(in, jitter).cast<long double>());
  const LongVector y = in.y.cast<long double>();
  long double log_det = 0.0L;
  for (Eigen::Index i = 0; i < y.size(); ++i) log_det += std::log(std::abs(lu.matrixLU()(i, i)));
  const long double m = static_cast<long double>(y.size());
  return static_cast<double>(0.5L * log_det + 0.5L * y.dot(lu.solve(y)) +
                             0.5L * m * std::log(2.0L * std::numbers::pi_v<long double>));
}

}  // namespace

TEST(Kernel, UnitDiagonalAndSymmetry) {
  const std::vector<double> a{0.1, 0.7};
  const std::vector<double> b{0.4, 0.2};
  const std::vector<double> phi{0.3, 0.05};
  EXPECT_EQ(kernel(a, a, phi), 1.0);
  EXPECT_EQ(kernel(a, b, phi), kernel(b, a, phi));
  EXPECT_NEAR(kernel(a, b, phi), std::exp(-(0.09 / 0.3 + 0.25 / 0.05)), 1e-15);
}

TEST(NegLogLikelihood, MatchesDenseInverseOracle) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 3 + static_cast<std::size_t>(uniform01(rng) * 18);
    const std::size_t d = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    const Instance in = random_instance(rng, m, d, 0.02, 2.0, 1e-3, 1.0);
    const GPModel model(in.h, in.X, in.y);
    const double jitter = model.factor().jitter;
    EXPECT_NEAR(neg_log_likelihood(in.h, in.X, in.y), oracle_nll(in, jitter), 1e-10) << "instance " << t;
    EXPECT_NEAR(model.neg_log_likelihood(), oracle_nll(in, jitter), 1e-10);
  }
}

TEST(Predict, MatchesDenseInverseOracle) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 3 + static_cast<std::size_t>(uniform01(rng) * 18);
    const std::size_t d = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    const Instance in = random_instance(rng, m, d, 0.02, 2.0, 1e-3, 1.0);
    const GPModel model(in.h, in.X, in.y);
    const Eigen::FullPivLU<LongMatrix> lu(dense_covariance(in, model.factor().jitter).cast<long double>());
    std::vector<double> xs(d);
    for (auto& v : xs) v = uniform01(rng);
    Vector c(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        const double diff = xs[p] - in.X(i, static_cast<Eigen::Index>(p));
        s += diff * diff / in.h.phi[p];
      }
      c(i) = std::exp(-s);
    }
    const LongVector cl = c.cast<long double>();
    const double mean = static_cast<double>(cl.dot(lu.solve(LongVector(in.y.cast<long double>()))));
    const double latent = static_cast<double>(1.0L - cl.dot(lu.solve(cl)));
    const auto noisy = model.predict(xs, VarianceMode::Noisy);
    const auto lat = model.predict(xs, VarianceMode::Latent);
    EXPECT_NEAR(noisy.mean, mean, 1e-10) << "instance " << t;
    EXPECT_NEAR(lat.variance, std::max(latent, 1e-12), 1e-10);
    EXPECT_NEAR(noisy.variance, latent + in.h.sigma2, 1e-10);
  }
}

TEST(Predict, InterpolatesWithoutNugget) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 5 + static_cast<std::size_t>(uniform01(rng) * 16);
    const std::size_t d = 2 + static_cast<std::size_t>(uniform01(rng) * 3);
    Instance in = random_instance(rng, m, d, 0.01, 0.1, 1e-3, 1e-3);
    in.h.sigma2 = 0.0;
    const GPModel model(in.h, in.X, in.y);
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = in.X.data() + i * d;
      const auto p = model.predict({row, d}, VarianceMode::Latent);
      EXPECT_NEAR(p.mean, in.y(static_cast<Eigen::Index>(i)), 1e-6) << "instance " << t;
    }
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Instance in = random_instance(rng, 15, 3, 0.05, 1.0, 0.01, 0.5);
    const Vector theta = to_log_params(in.h);
    const auto g = neg_log_likelihood_with_gradient(theta, in.X, in.y);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(g->value, neg_log_likelihood(in.h, in.X, in.y), 1e-12);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double h = 1e-5;
      Vector tp = theta;
      Vector tm = theta;
      tp(k) += h;
      tm(k) -= h;
      const double fd = (neg_log_likelihood(from_log_params(tp), in.X, in.y) -
                         neg_log_likelihood(from_log_params(tm), in.X, in.y)) /
                        (2 * h);
      EXPECT_NEAR(g->gradient(k), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "param " << k;
    }
  }
}

TEST(LogParams, RoundTripAndClamping) {
  GPHyperparams h{{0.5, 0.01}, 0.2};
  const GPHyperparams back = from_log_params(to_log_params(h));
  EXPECT_NEAR(back.phi[0], 0.5, 1e-15);
  EXPECT_NEAR(back.sigma2, 0.2, 1e-15);
  Vector far(3);
  far << 50.0, -50.0, 50.0;
  const GPHyperparams c = from_log_params(far);
  EXPECT_EQ(c.phi[0], kPhiMax);
  EXPECT_EQ(c.phi[1], kPhiMin);
  EXPECT_EQ(c.sigma2, kSigma2Max);
  EXPECT_TRUE(c.in_bounds());
}

TEST(Fit, ReachesAtLeastTheGeneratingLikelihood) {
  // Draw y from the GP prior with known parameters; the optimizer should
  // find parameters at least as likely as the truth.
  Rng rng(5);
  const std::size_t m = 80;
  Instance in;
  in.X.resize(m, 2);
  for (Eigen::Index i = 0; i < in.X.rows(); ++i) {
    in.X(i, 0) = uniform01(rng);
    in.X(i, 1) = uniform01(rng);
  }
  in.h = {{0.08, 0.3}, 0.05};
  const Eigen::MatrixXd C = dense_covariance(in, 0.0);
  const Eigen::MatrixXd L = C.llt().matrixL();
  Vector z(m);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
  in.y = L * z;
  const GPModel model = fit(in.X, in.y, {5, 9});
  EXPECT_TRUE(model.hyperparams().in_bounds());
  EXPECT_LE(model.neg_log_likelihood(), neg_log_likelihood(in.h, in.X, in.y) + 1e-6);
  EXPECT_GT(model.hyperparams().phi[0], 0.01);
  EXPECT_LT(model.hyperparams().phi[0], 0.5);
}

TEST(Fit, DeterministicForFixedSeed) {
  Rng rng(6);
  const Instance in = random_instance(rng, 40, 2, 0.1, 0.1, 0.1, 0.1);
  const GPModel a = fit(in.X, in.y, {5, 3});
  const GPModel b = fit(in.X, in.y, {5, 3});
  EXPECT_EQ(a.hyperparams().phi, b.hyperparams().phi);
  EXPECT_EQ(a.hyperparams().sigma2, b.hyperparams().sigma2);
}

TEST(Fit, StaysInsideBoxOnPureNoise) {
  Rng rng(7);
  const Instance in = random_instance(rng, 60, 3, 0.1, 0.1, 0.1, 0.1);
  const GPModel model = fit(in.X, in.y);
  EXPECT_TRUE(model.hyperparams().in_bounds());
  for (double phi : model.hyperparams().phi) {
    EXPECT_GE(phi, kPhiMin);
    EXPECT_LE(phi, kPhiMax);
  }
}

TEST(Fit, DuplicatedInputsStillFactorize) {
  Matrix X(10, 1);
  Vector y(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    X(i, 0) = i < 5 ? 0.3 : 0.7;
    y(i) = i < 5 ? -1.0 + 0.01 * static_cast<double>(i) : 1.0;
  }
  const GPModel model = fit(X, y);
  EXPECT_TRUE(std::isfinite(model.neg_log_likelihood()));
}

TEST(Factorize, JitterOnlyWhenNeeded) {
  Matrix X(3, 1);
  X << 0.1, 0.5, 0.9;
  const auto clean = factorize({{0.05}, 0.0}, X);
  ASSERT_TRUE(clean.has_value());
  EXPECT_EQ(clean->jitter, 0.0);
  X << 0.3, 0.3, 0.9;
  const auto dup = factorize({{0.05}, 0.0}, X);
  ASSERT_TRUE(dup.has_value());
  EXPECT_GE(dup->jitter, kInitialJitter);
  EXPECT_LE(dup->jitter, kMaxJitter);
  const Eigen::MatrixXd L = dup->llt.matrixL();
  const Eigen::MatrixXd back = L * L.transpose();
  EXPECT_LT((back - dup->cov).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GPModel, RejectsMismatchedShapes) {
  EXPECT_THROW(GPModel({{0.1, 0.1}, 0.1}, Matrix::Zero(3, 1), Vector::Zero(3)), ConfigError);
  EXPECT_THROW(GPModel({{0.1}, 0.1}, Matrix::Zero(3, 1), Vector::Zero(2)), ConfigError);
}

TEST(GPModel, NonFiniteInputsFail) {
  Matrix X(3, 1);
  X << 0.1, std::nan(""), 0.5;
  EXPECT_THROW(GPModel({{0.1}, 0.1}, X, Vector::Zero(3)), NumericalError);
}
