#pragma once

// File formats: comma-separated curve tables, JSON band records, and the
// CSV/JSON experiment reports.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "confband/conformal.hpp"
#include "confband/error.hpp"
#include "confband/experiment.hpp"
#include "confband/grid.hpp"
#include "json.hpp"

namespace confband {

/// Shortest exact text for a double: 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CurveTable {
  FunctionalSample sample;
  /// Empty when the table carries no identifier column.
  std::vector<std::string> ids;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line, std::size_t column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v)) {
    throw Error(ErrorCode::parse, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                      ": cannot parse '" + cell + "' as a finite number");
  }
  return v;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  return out;
}

inline void close_checked(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace detail

/// Parses a curve table. The first row holds the grid points; every later
/// row holds one curve. A leading header cell "id" marks an identifier column.
inline CurveTable parse_curve_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = detail::split_csv_line(line);
  }
  if (header.empty()) throw Error(ErrorCode::parse, "curve table is empty");
  const bool has_ids = header.front() == "id";
  const std::size_t first = has_ids ? 1 : 0;
  std::vector<double> points;
  for (std::size_t c = first; c < header.size(); ++c) points.push_back(detail::parse_cell(header[c], lineno, c + 1));
  if (points.size() < 2) throw Error(ErrorCode::parse, "grid row needs at least 2 points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1])) {
      throw Error(ErrorCode::non_monotone_grid, "grid values must be strictly increasing (column " +
                                                    std::to_string(i + first + 1) + ")");
    }
  }
  GridPtr grid = make_uniform_grid(points.front(), points.back(), points.size());
  const double tol = 1e-9 * grid->length();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(points[i] - (*grid)[i]) > tol) {
      throw Error(ErrorCode::non_monotone_grid, "grid is not uniformly spaced (column " +
                                                    std::to_string(i + first + 1) + ")");
    }
  }

  CurveTable table{FunctionalSample(grid), {}};
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ragged_row, "row at line " + std::to_string(lineno) + " has " +
                                             std::to_string(cells.size() - first) + " values, expected " +
                                             std::to_string(points.size()));
    }
    std::vector<double> values;
    values.reserve(points.size());
    for (std::size_t c = first; c < cells.size(); ++c) values.push_back(detail::parse_cell(cells[c], lineno, c + 1));
    if (has_ids) table.ids.push_back(cells.front());
    table.sample.push_back(Curve(grid, std::move(values)));
  }
  if (table.sample.empty()) throw Error(ErrorCode::parse, "curve table has a grid row but no curves");
  return table;
}

inline CurveTable read_curve_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  return parse_curve_table(in);
}

inline FunctionalSample read_curves(const std::string& path) { return read_curve_table(path).sample; }

inline void write_curves(const std::string& path, const FunctionalSample& sample,
                         const std::vector<std::string>& ids = {}) {
  if (!ids.empty() && ids.size() != sample.size()) {
    throw Error(ErrorCode::invalid_argument, "one identifier per curve is required");
  }
  auto out = detail::open_out(path);
  if (!ids.empty()) out << "id,";
  const auto pts = sample.grid().points();
  for (std::size_t i = 0; i < pts.size(); ++i) out << (i ? "," : "") << format_double(pts[i]);
  out << '\n';
  for (std::size_t j = 0; j < sample.size(); ++j) {
    if (!ids.empty()) out << ids[j] << ',';
    for (std::size_t i = 0; i < sample[j].size(); ++i) out << (i ? "," : "") << format_double(sample[j][i]);
    out << '\n';
  }
  detail::close_checked(out, path);
}

inline constexpr std::string_view band_schema = "confband.band";
inline constexpr int band_schema_version = 1;

/// A fitted band plus what is needed to refit it from the same data.
struct BandRecord {
  PredictionBand band;
  double alpha = 0.1;
  std::string method = "s0";
  std::string predictor = "mean";
  double rho = 0.5;
  std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const BandRecord& r) {
  using nlohmann::json;
  const PredictionBand& b = r.band;
  auto vec = [](const Curve& c) { return std::vector<double>(c.values().begin(), c.values().end()); };
  json j;
  j["schema"] = band_schema;
  j["version"] = band_schema_version;
  j["grid"] = {{"a", b.grid->a()}, {"b", b.grid->b()}, {"p", b.grid->size()}};
  j["center"] = vec(b.center);
  j["lower"] = vec(b.lower);
  j["upper"] = vec(b.upper);
  j["modulation"] = {{"kind", std::string(to_string(b.modulation.kind))}, {"values", vec(b.modulation.curve)}};
  j["radius_scale"] = b.radius_scale;
  j["closed"] = b.closed;
  j["full_space"] = b.full_space;
  j["lower_clip"] = b.lower_clip ? json(*b.lower_clip) : json(nullptr);
  j["smoothed"] = b.smoothed ? json{{"tau", b.smoothed->tau},
                                     {"tie_right", b.smoothed->tie_right},
                                     {"tie_left", b.smoothed->tie_left}}
                             : json(nullptr);
  j["alpha"] = r.alpha;
  j["method"] = r.method;
  j["predictor"] = r.predictor;
  j["rho"] = r.rho;
  j["seed"] = r.seed;
  return j;
}

inline BandRecord band_record_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != band_schema || j.at("version").get<int>() != band_schema_version) {
      throw Error(ErrorCode::schema_version, "unsupported band schema '" + j.at("schema").get<std::string>() +
                                                 "' version " + std::to_string(j.at("version").get<int>()));
    }
    const auto& g = j.at("grid");
    GridPtr grid = make_uniform_grid(g.at("a").get<double>(), g.at("b").get<double>(), g.at("p").get<std::size_t>());
    auto curve = [&grid](const nlohmann::json& a) { return Curve(grid, a.get<std::vector<double>>()); };
    BandRecord r{PredictionBand{grid,
                                curve(j.at("center")),
                                j.at("radius_scale").get<double>(),
                                {curve(j.at("modulation").at("values")),
                                 modulation_kind_from_string(j.at("modulation").at("kind").get<std::string>())},
                                curve(j.at("lower")),
                                curve(j.at("upper")),
                                j.at("closed").get<bool>(),
                                j.at("full_space").get<bool>(),
                                std::nullopt,
                                std::nullopt},
                 j.at("alpha").get<double>(),
                 j.at("method").get<std::string>(),
                 j.at("predictor").get<std::string>(),
                 j.at("rho").get<double>(),
                 j.at("seed").get<std::uint64_t>()};
    if (!j.at("lower_clip").is_null()) r.band.lower_clip = j.at("lower_clip").get<double>();
    if (const auto& s = j.at("smoothed"); !s.is_null()) {
      r.band.smoothed = SmoothedParams{s.at("tau").get<double>(), s.at("tie_right").get<std::size_t>(),
                                       s.at("tie_left").get<std::size_t>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed band record: ") + e.what());
  }
}

inline void write_band(const std::string& path, const BandRecord& record) {
  auto out = detail::open_out(path);
  out << to_json(record).dump(2) << '\n';
  detail::close_checked(out, path);
}

inline BandRecord read_band(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "'" + path + "' is not valid JSON: " + e.what());
  }
  return band_record_from_json(j);
}

/// Plot-ready table: one row per grid point with t, lower, center, upper.
inline void write_band_table(const std::string& path, const PredictionBand& band) {
  auto out = detail::open_out(path);
  out << "t,lower,center,upper\n";
  for (std::size_t i = 0; i < band.grid->size(); ++i) {
    out << format_double((*band.grid)[i]) << ',' << format_double(band.lower[i]) << ','
        << format_double(band.center[i]) << ',' << format_double(band.upper[i]) << '\n';
  }
  detail::close_checked(out, path);
}

inline void write_coverage_report(const std::string& path, const CoverageReport& rep) {
  auto out = detail::open_out(path);
  out << "scenario,n,l,alpha,smoothed,theoretical,method,replications,mean,sd,ci99_low,ci99_high,ci_includes_nominal\n";
  for (const auto& row : rep.rows) {
    out << to_string(rep.scenario) << ',' << rep.n << ',' << rep.l << ',' << format_double(rep.alpha) << ','
        << (rep.smoothed ? 1 : 0) << ',' << format_double(rep.theoretical) << ',' << to_string(row.method) << ','
        << row.replications << ',' << format_double(row.mean) << ',' << format_double(row.sd) << ','
        << format_double(row.ci_low) << ',' << format_double(row.ci_high) << ',' << (row.ci_includes_nominal ? 1 : 0)
        << '\n';
  }
  detail::close_checked(out, path);
}

inline void write_size_report(const std::string& path, const SizeReport& rep) {
  auto out = detail::open_out(path);
  out << "scenario,n,method,replications,mean_q,sd_q\n";
  for (const auto& row : rep.rows) {
    out << to_string(rep.scenario) << ',' << rep.n << ',' << to_string(row.method) << ',' << row.replications << ','
        << format_double(row.mean_q) << ',' << format_double(row.sd_q) << '\n';
  }
  detail::close_checked(out, path);
}

inline void write_replications(const std::string& path, const ExperimentResult& res,
                               const std::vector<Method>& methods) {
  auto out = detail::open_out(path);
  out << "replication,split_seed,tau";
  for (Method m : methods) out << ",coverage_" << to_string(m) << ",q_" << to_string(m);
  out << ",error\n";
  for (const auto& rec : res.records) {
    out << rec.index << ',' << rec.split_seed << ',' << (rec.tau ? format_double(*rec.tau) : "");
    for (std::size_t k = 0; k < methods.size(); ++k) {
      if (rec.error) {
        out << ",,";
      } else {
        out << ',' << format_double(rec.coverage[k]) << ',' << format_double(rec.q[k]);
      }
    }
    out << ',' << (rec.error ? "\"" + *rec.error + "\"" : "") << '\n';
  }
  detail::close_checked(out, path);
}

}  // namespace confband
