#include "subgp/serialize.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "subgp/csv.hpp"
#include "subgp/error.hpp"

namespace subgp {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

Json to_json(const NormalizationState& s) {
  return Json{{"input_min", s.input_min},
              {"input_max", s.input_max},
              {"response_mean", s.response_mean},
              {"response_sd", s.response_sd},
              {"log_response", s.log_response}};
}

NormalizationState normalization_from_json(const Json& j) {
  try {
    NormalizationState s;
    s.input_min = j.at("input_min").get<std::vector<double>>();
    s.input_max = j.at("input_max").get<std::vector<double>>();
    s.response_mean = j.at("response_mean").get<double>();
    s.response_sd = j.at("response_sd").get<double>();
    s.log_response = j.value("log_response", true);
    if (s.input_min.size() != s.input_max.size()) {
      throw ConfigError("normalization min/max arrays differ in length");
    }
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed normalization state: ") + e.what());
  }
}

void write_catalog_csv(std::ostream& out, const Catalog& cat) {
  for (std::size_t p = 0; p < cat.dim(); ++p) out << 'x' << p + 1 << ',';
  out << "y\n";
  for (std::size_t i = 0; i < cat.size(); ++i) {
    for (double v : cat.row(i)) out << csv::format_double(v) << ',';
    out << csv::format_double(cat.y(static_cast<Eigen::Index>(i))) << '\n';
  }
}

Catalog read_catalog_csv(std::istream& in, const NormalizationState& transform) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("catalog CSV is empty: missing header");
  const auto header = csv::split_fields(line);
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim + 1)) ++dim;
  if (dim == 0) throw ConfigError("catalog CSV header must start with x1");
  const bool has_y = header.size() > dim && header[dim] == "y";

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::size_t> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_fields(line);
    if (f.size() != header.size()) {
      throw ConfigError("row " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    for (std::size_t p = 0; p < dim; ++p) {
      double v;
      if (!csv::parse_double(f[p], v)) {
        throw DataError("row " + std::to_string(line_no) + ": bad value '" + std::string(f[p]) + "'");
      }
      xs.push_back(v);
    }
    double yv = std::numeric_limits<double>::quiet_NaN();
    if (has_y && !csv::parse_double(f[dim], yv)) {
      throw DataError("row " + std::to_string(line_no) + ": bad y value");
    }
    ys.push_back(yv);
    rows.push_back(line_no);
  }
  Catalog cat;
  const auto n = static_cast<Eigen::Index>(ys.size());
  cat.X = Eigen::Map<Matrix>(xs.data(), n, static_cast<Eigen::Index>(dim));
  cat.y = Eigen::Map<Vector>(ys.data(), n);
  cat.transform = transform;
  cat.source_rows = std::move(rows);
  return cat;
}

Json to_json(const Partitioning& part, const PartitionGraph& graph, std::string_view mode) {
  Json cells = Json::array();
  for (std::size_t c = 0; c < part.size(); ++c) {
    const auto& h = part.cells[c];
    cells.push_back(Json{{"id", c},
                         {"lower", h.lower},
                         {"upper", h.upper},
                         {"member_count", h.count()},
                         {"oversize_flag", h.oversize}});
  }
  Json edges = Json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back(Json::array({a, b}));
  return Json{{"mode", mode},
              {"n_min", part.bounds.n_min},
              {"n_max", part.bounds.n_max},
              {"cells", std::move(cells)},
              {"edges", std::move(edges)}};
}

void write_members_csv(std::ostream& out, const Partitioning& part) {
  out << "cell_id,index\n";
  for (std::size_t c = 0; c < part.size(); ++c) {
    for (auto i : part.cells[c].members) out << c << ',' << i << '\n';
  }
}

Partitioning partitioning_from_files(const Json& j, std::istream& members) {
  Partitioning part;
  try {
    part.bounds.n_min = j.at("n_min").get<std::size_t>();
    part.bounds.n_max = j.at("n_max").get<std::size_t>();
    for (const auto& c : j.at("cells")) {
      HyperRect h;
      h.lower = c.at("lower").get<std::vector<double>>();
      h.upper = c.at("upper").get<std::vector<double>>();
      h.oversize = c.at("oversize_flag").get<bool>();
      part.cells.push_back(std::move(h));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed partition file: ") + e.what());
  }
  std::string line;
  std::getline(members, line);
  std::size_t line_no = 1;
  while (std::getline(members, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_fields(line);
    double c = 0;
    double i = 0;
    if (f.size() != 2 || !csv::parse_double(f[0], c) || !csv::parse_double(f[1], i) || c < 0 ||
        static_cast<std::size_t>(c) >= part.size()) {
      throw ConfigError("members.csv line " + std::to_string(line_no) + " is malformed");
    }
    part.cells[static_cast<std::size_t>(c)].members.push_back(static_cast<std::size_t>(i));
  }
  return part;
}

Json to_json(const GPModel& model) {
  const Matrix& X = model.inputs();
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    rows.push_back(std::vector<double>(X.row(i).data(), X.row(i).data() + X.cols()));
  }
  const Vector& y = model.responses();
  return Json{{"phi", model.hyperparams().phi},
              {"sigma2", model.hyperparams().sigma2},
              {"X_train", std::move(rows)},
              {"y_train", std::vector<double>(y.data(), y.data() + y.size())}};
}

GPModel gp_from_json(const Json& j) {
  try {
    GPHyperparams h;
    h.phi = j.at("phi").get<std::vector<double>>();
    h.sigma2 = j.at("sigma2").get<double>();
    const auto rows = j.at("X_train").get<std::vector<std::vector<double>>>();
    const auto ys = j.at("y_train").get<std::vector<double>>();
    if (rows.size() != ys.size()) throw ConfigError("member file: X_train and y_train differ in length");
    Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(h.phi.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != h.phi.size()) throw ConfigError("member file: ragged X_train");
      for (std::size_t p = 0; p < h.phi.size(); ++p) {
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = rows[i][p];
      }
    }
    Vector y = Eigen::Map<const Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    return GPModel(std::move(h), std::move(X), std::move(y));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed member file: ") + e.what());
  }
}

std::string trace_jsonl(const SubsampleDraw& draw) {
  std::string out;
  for (const auto& s : draw.trace) {
    out += Json{{"step", s.step},
                {"cell_id", s.cell},
                {"chosen_index", s.chosen_index},
                {"neighbor_ids", s.neighbor_cells},
                {"weight_entropy", s.weight_entropy}}
               .dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string member_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%03zu.json", i);
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

}  // namespace

void save_ensemble(const fs::path& dir, const EnsembleModel& model, const Json& config) {
  fs::create_directories(dir);
  Json members = Json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    const std::string name = member_file_name(i);
    const std::string text = to_json(model.members[i]).dump() + "\n";
    write_text_file(dir / name, text);
    members.push_back(Json{{"file", name},
                           {"seed", model.seeds[i]},
                           {"hash", hex64(fnv1a64(text))},
                           {"phi", model.members[i].hyperparams().phi},
                           {"sigma2", model.members[i].hyperparams().sigma2}});
  }
  Json manifest{{"format", "subgp-ensemble"},
                {"version", 1},
                {"created", utc_timestamp()},
                {"config", config},
                {"base_seed", model.options.sampler.seed},
                {"member_count", model.size()},
                {"members", std::move(members)}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedEnsemble load_ensemble(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("ensemble directory not found: " + dir.string());
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw ConfigError("ensemble manifest not found: " + mpath.string());
  LoadedEnsemble out;
  try {
    out.manifest = Json::parse(read_text_file(mpath));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed ensemble manifest: ") + e.what());
  }
  if (!out.manifest.contains("members") || !out.manifest["members"].is_array() ||
      out.manifest["members"].empty()) {
    throw ConfigError("ensemble manifest lists no members");
  }
  for (const auto& m : out.manifest["members"]) {
    const std::string name = m.at("file").get<std::string>();
    const std::string text = read_text_file(dir / name);
    if (m.contains("hash") && m["hash"].get<std::string>() != hex64(fnv1a64(text))) {
      throw DataError("ensemble member " + name + " does not match its manifest hash");
    }
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      throw ConfigError("malformed member file " + name + ": " + e.what());
    }
    out.members.push_back(gp_from_json(j));
  }
  return out;
}

}  // namespace subgp
