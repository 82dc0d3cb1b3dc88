#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subgp/catalog.hpp"

namespace subgp {

/// One photometric record: AB magnitudes in u, g, r, i, z and the
/// spectroscopic redshift.
struct RawRecord {
  double u = 0, g = 0, r = 0, i = 0, z = 0;
  double spec_z = 0;
};

inline constexpr std::size_t kFeatureCount = 5;

/// Colors u-g, g-r, r-i, i-z and the i-band magnitude.
/// Throws DataError on a non-finite magnitude.
std::array<double, kFeatureCount> compute_features(const RawRecord& r);

struct Rejection {
  std::size_t index;  // position in the input sequence (or CSV line number)
  std::string reason;
};

struct FeatureTable {
  Matrix features;  // N x 5
  Vector spec_z;
  std::vector<std::size_t> source_rows;
  std::vector<Rejection> rejected;
};

/// Row-wise feature computation. Invalid records (non-finite magnitude,
/// spec_z <= 0) are skipped and reported by index.
FeatureTable compute_features(std::span<const RawRecord> records);

struct RawCsv {
  std::vector<RawRecord> records;
  std::vector<std::size_t> line_numbers;  // 1-based, header is line 1
  std::vector<Rejection> parse_failures;  // index = line number
};

/// Reads a CSV whose header contains u,g,r,i,z,spec_z (other columns are
/// ignored). Throws ConfigError naming the first missing column.
RawCsv read_raw_csv(std::istream& in);

/// Fits the normalization on the rows listed in fit_on and applies it to
/// every row. Values outside the fitted range are clamped into [0,1] with a
/// logged warning.
std::pair<Catalog, NormalizationState> normalize(const Matrix& raw_features, const Vector& raw_z,
                                                 std::span<const std::size_t> fit_on);

struct HoldoutIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random split; |test| = round(fraction * n). Both lists sorted.
HoldoutIndices holdout_indices(std::size_t n, double fraction, std::uint64_t seed);

/// Splits a catalog and refits the normalization on the training rows, so
/// the training portion has exact zero mean, unit sd and [0,1] range.
std::pair<Catalog, Catalog> split_holdout(const Catalog& cat, double fraction, std::uint64_t seed);

/// Drops rows with |y| > k or any input outside [0,1]. k = +inf disables
/// the response filter.
Catalog clip_outliers(const Catalog& cat, double k = std::numeric_limits<double>::infinity());

/// Clamp X into [0,1]; returns the number of clamped rows.
std::size_t clamp_to_unit_cube(Catalog& cat);

}  // namespace subgp
