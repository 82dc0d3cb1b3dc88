#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace subgp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Affine constants mapping raw features to [0,1] and the (optionally
/// logged) response to zero mean and unit standard deviation.
struct NormalizationState {
  std::vector<double> input_min;
  std::vector<double> input_max;
  double response_mean = 0.0;
  double response_sd = 1.0;
  /// Responses are natural-logged before standardization (redshift catalogs).
  bool log_response = true;

  std::size_t dim() const { return input_min.size(); }

  double forward_x(std::size_t p, double raw) const {
    return (raw - input_min[p]) / (input_max[p] - input_min[p]);
  }
  double inverse_x(std::size_t p, double x) const {
    return input_min[p] + x * (input_max[p] - input_min[p]);
  }
  double forward_y(double raw) const;
  double inverse_y(double y) const;

  /// Identity transform on [0,1]^d with a non-logged response.
  static NormalizationState identity(std::size_t dim);
};

/// Normalized dataset: rows of X in [0,1]^d, standardized responses y.
struct Catalog {
  Matrix X;
  Vector y;
  NormalizationState transform;
  /// Row number of each point in the source file (or generator order).
  std::vector<std::size_t> source_rows;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
  bool empty() const { return size() == 0; }

  std::span<const double> row(std::size_t i) const {
    return {X.data() + i * dim(), dim()};
  }

  Catalog subset(std::span<const std::size_t> rows) const;
};

}  // namespace subgp
