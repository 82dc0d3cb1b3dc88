#include "subgp/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "subgp/csv.hpp"
#include "subgp/error.hpp"
#include "subgp/random.hpp"

namespace subgp {

double NormalizationState::forward_y(double raw) const {
  const double v = log_response ? std::log(raw) : raw;
  return (v - response_mean) / response_sd;
}

double NormalizationState::inverse_y(double y) const {
  const double v = response_mean + y * response_sd;
  return log_response ? std::exp(v) : v;
}

NormalizationState NormalizationState::identity(std::size_t dim) {
  NormalizationState s;
  s.input_min.assign(dim, 0.0);
  s.input_max.assign(dim, 1.0);
  s.log_response = false;
  return s;
}

Catalog Catalog::subset(std::span<const std::size_t> rows) const {
  Catalog out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.transform = transform;
  out.source_rows.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    out.X.row(static_cast<Eigen::Index>(k)) = X.row(r);
    out.y(static_cast<Eigen::Index>(k)) = y(r);
    out.source_rows.push_back(source_rows.empty() ? rows[k] : source_rows[rows[k]]);
  }
  return out;
}

std::array<double, kFeatureCount> compute_features(const RawRecord& r) {
  const std::array<std::pair<const char*, double>, 5> mags{
      {{"u", r.u}, {"g", r.g}, {"r", r.r}, {"i", r.i}, {"z", r.z}}};
  for (const auto& [name, value] : mags) {
    if (!std::isfinite(value)) throw DataError(std::string("non-finite magnitude ") + name);
  }
  return {r.u - r.g, r.g - r.r, r.r - r.i, r.i - r.z, r.i};
}

FeatureTable compute_features(std::span<const RawRecord> records) {
  FeatureTable table;
  std::vector<std::array<double, kFeatureCount>> rows;
  std::vector<double> z;
  rows.reserve(records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    const RawRecord& rec = records[k];
    try {
      auto f = compute_features(rec);
      if (!(std::isfinite(rec.spec_z) && rec.spec_z > 0.0)) {
        throw DataError("spec_z must be positive and finite");
      }
      rows.push_back(f);
      z.push_back(rec.spec_z);
      table.source_rows.push_back(k);
    } catch (const DataError& e) {
      table.rejected.push_back({k, e.what()});
    }
  }
  table.features.resize(static_cast<Eigen::Index>(rows.size()), kFeatureCount);
  table.spec_z.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t p = 0; p < kFeatureCount; ++p) {
      table.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p)) = rows[k][p];
    }
    table.spec_z(static_cast<Eigen::Index>(k)) = z[k];
  }
  return table;
}

using csv::parse_double;
using csv::split_fields;
using csv::trim;

RawCsv read_raw_csv(std::istream& in) {
  static constexpr std::array<const char*, 6> kColumns{"u", "g", "r", "i", "z", "spec_z"};
  RawCsv out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("input CSV is empty: missing header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::map<std::string, std::size_t, std::less<>> header;
  const auto names = split_fields(line);
  for (std::size_t c = 0; c < names.size(); ++c) header.emplace(std::string(names[c]), c);
  std::array<std::size_t, 6> col{};
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    auto it = header.find(kColumns[k]);
    if (it == header.end()) throw ConfigError(std::string("missing column '") + kColumns[k] + "'");
    col[k] = it->second;
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::array<double, 6> v{};
    bool ok = true;
    for (std::size_t k = 0; k < 6 && ok; ++k) {
      if (col[k] >= fields.size() || !parse_double(fields[col[k]], v[k])) {
        out.parse_failures.push_back(
            {line_no, std::string("cannot parse column '") + kColumns[k] + "'"});
        ok = false;
      }
    }
    if (!ok) continue;
    out.records.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    out.line_numbers.push_back(line_no);
  }
  return out;
}

namespace {

double population_sd(const Vector& v, double mean) {
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

}  // namespace

std::size_t clamp_to_unit_cube(Catalog& cat) {
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < cat.X.rows(); ++i) {
    bool hit = false;
    for (Eigen::Index p = 0; p < cat.X.cols(); ++p) {
      double& x = cat.X(i, p);
      if (x < 0.0 || x > 1.0) {
        x = std::clamp(x, 0.0, 1.0);
        hit = true;
      }
    }
    clamped += hit ? 1 : 0;
  }
  if (clamped > 0) {
    spdlog::warn("{} row(s) fell outside the fitted input range and were clamped into [0,1]",
                 clamped);
  }
  return clamped;
}

std::pair<Catalog, NormalizationState> normalize(const Matrix& raw_features, const Vector& raw_z,
                                                 std::span<const std::size_t> fit_on) {
  if (fit_on.empty()) throw ConfigError("normalize: fit_on is empty");
  if (raw_features.rows() != raw_z.size()) throw ConfigError("normalize: row count mismatch");
  for (Eigen::Index i = 0; i < raw_z.size(); ++i) {
    if (!(raw_z(i) > 0.0) || !std::isfinite(raw_z(i))) {
      throw DataError("normalize: redshift at row " + std::to_string(i) +
                      " is not positive; log transform undefined");
    }
  }
  const Eigen::Index d = raw_features.cols();
  NormalizationState state;
  state.log_response = true;
  state.input_min.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
  state.input_max.assign(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());

  Vector fit_logz(static_cast<Eigen::Index>(fit_on.size()));
  for (std::size_t k = 0; k < fit_on.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(fit_on[k]);
    for (Eigen::Index p = 0; p < d; ++p) {
      const auto pp = static_cast<std::size_t>(p);
      state.input_min[pp] = std::min(state.input_min[pp], raw_features(r, p));
      state.input_max[pp] = std::max(state.input_max[pp], raw_features(r, p));
    }
    fit_logz(static_cast<Eigen::Index>(k)) = std::log(raw_z(r));
  }
  for (Eigen::Index p = 0; p < d; ++p) {
    const auto pp = static_cast<std::size_t>(p);
    if (!(state.input_max[pp] > state.input_min[pp])) {
      throw DataError("normalize: input dimension " + std::to_string(p + 1) +
                      " has zero range (degenerate)");
    }
  }
  state.response_mean = fit_logz.mean();
  state.response_sd = population_sd(fit_logz, state.response_mean);
  if (!(state.response_sd > 0.0)) throw DataError("normalize: log redshift has zero variance");

  Catalog cat;
  cat.transform = state;
  cat.X.resize(raw_features.rows(), d);
  cat.y.resize(raw_z.size());
  cat.source_rows.resize(static_cast<std::size_t>(raw_z.size()));
  std::iota(cat.source_rows.begin(), cat.source_rows.end(), std::size_t{0});
  for (Eigen::Index i = 0; i < raw_features.rows(); ++i) {
    for (Eigen::Index p = 0; p < d; ++p) {
      cat.X(i, p) = state.forward_x(static_cast<std::size_t>(p), raw_features(i, p));
    }
    cat.y(i) = state.forward_y(raw_z(i));
  }
  clamp_to_unit_cube(cat);
  return {std::move(cat), state};
}

HoldoutIndices holdout_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0,1), got " + std::to_string(fraction));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  HoldoutIndices out;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::pair<Catalog, Catalog> split_holdout(const Catalog& cat, double fraction, std::uint64_t seed) {
  const HoldoutIndices idx = holdout_indices(cat.size(), fraction, seed);
  if (idx.train.empty()) throw DataError("split_holdout: training portion is empty");
  Catalog train = cat.subset(idx.train);
  Catalog test = cat.subset(idx.test);

  // Refit on the training rows by composing a second affine map onto the
  // existing one.
  NormalizationState& st = train.transform;
  const Eigen::Index d = train.X.cols();
  for (Eigen::Index p = 0; p < d; ++p) {
    const auto pp = static_cast<std::size_t>(p);
    const double lo = train.X.col(p).minCoeff();
    const double hi = train.X.col(p).maxCoeff();
    if (!(hi > lo)) {
      throw DataError("split_holdout: input dimension " + std::to_string(p + 1) +
                      " has zero range on the training portion");
    }
    const double new_min = st.inverse_x(pp, lo);
    const double new_max = st.inverse_x(pp, hi);
    train.X.col(p) = (train.X.col(p).array() - lo) / (hi - lo);
    test.X.col(p) = (test.X.col(p).array() - lo) / (hi - lo);
    st.input_min[pp] = new_min;
    st.input_max[pp] = new_max;
  }
  const double m = train.y.mean();
  const double s = population_sd(train.y, m);
  if (!(s > 0.0)) throw DataError("split_holdout: training responses have zero variance");
  train.y = (train.y.array() - m) / s;
  test.y = (test.y.array() - m) / s;
  st.response_mean += st.response_sd * m;
  st.response_sd *= s;
  test.transform = st;
  clamp_to_unit_cube(test);
  return {std::move(train), std::move(test)};
}

Catalog clip_outliers(const Catalog& cat, double k) {
  if (!(k > 0.0)) throw ConfigError("clip_outliers: k must be positive");
  std::vector<std::size_t> keep;
  keep.reserve(cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (std::abs(cat.y(r)) > k) continue;
    const auto row = cat.X.row(r);
    if ((row.array() < 0.0).any() || (row.array() > 1.0).any()) continue;
    keep.push_back(i);
  }
  return cat.subset(keep);
}

}  // namespace subgp
