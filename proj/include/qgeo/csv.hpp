#ifndef QGEO_CSV_HPP
#define QGEO_CSV_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgeo/propagation.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header; // empty when the file had none
  Matrix values;
};

/// Strict numeric CSV reader: every row must have the same field count and
/// every field must parse as a double.  Errors carry 1-based line and column.
inline CsvTable read_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");

  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (line_no == 1 && has_header) {
      table.header = fields;
      n_fields = fields.size();
      continue;
    }
    if (n_fields == 0) n_fields = fields.size();
    if (fields.size() != n_fields)
      throw ParseError("expected " + std::to_string(n_fields) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      // Tolerate surrounding spaces, nothing else.
      std::size_t b = f.find_first_not_of(" \t");
      std::size_t e = f.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw ParseError("empty field", line_no, c + 1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data() + b, f.data() + e + 1, value);
      if (ec != std::errc{} || ptr != f.data() + e + 1)
        throw ParseError("'" + f + "' is not a number", line_no, c + 1);
      row[c] = value;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("'" + path.string() + "' contains no data rows");

  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(n_fields));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < n_fields; ++c)
      table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return table;
}

/// Reads an ambient point matrix as a PointCloud (tag csv, no intrinsic
/// coordinates).  Optionally standardizes columns to zero mean / unit
/// variance, which is how heterogeneous feature tables become comparable to
/// geometric clouds; constant columns are left centered but unscaled.
inline PointCloud ingest_csv(const std::filesystem::path& path, bool has_header,
                             bool standardize = false) {
  CsvTable table = read_csv(path, has_header);
  PointCloud cloud;
  cloud.points = std::move(table.values);
  cloud.source_tag = Manifold::csv;
  if (standardize) {
    const Eigen::RowVectorXd mean = cloud.points.colwise().mean();
    cloud.points.rowwise() -= mean;
    for (Index c = 0; c < cloud.points.cols(); ++c) {
      const double sd = std::sqrt(cloud.points.col(c).squaredNorm() /
                                  static_cast<double>(cloud.points.rows()));
      if (sd > 1e-12) cloud.points.col(c) /= sd;
    }
  }
  cloud.validate();
  return cloud;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                             const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c)
      out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

/// Sidecar path for a CSV artifact: cloud.csv -> cloud.meta.json.
inline std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

inline void write_point_cloud_csv(const PointCloud& cloud,
                                  const std::filesystem::path& path,
                                  std::uint64_t seed,
                                  const nlohmann::json& params = nlohmann::json::object()) {
  std::vector<std::string> header;
  for (Index c = 0; c < cloud.dim(); ++c)
    header.push_back("dim_" + std::to_string(c));
  write_matrix_csv(path, cloud.points, header);

  nlohmann::json meta;
  meta["source_tag"] = to_string(cloud.source_tag);
  meta["n"] = cloud.n();
  meta["seed"] = seed;
  meta["params"] = params;
  std::ofstream out(meta_path_for(path));
  if (!out) throw DataError("cannot open sidecar for '" + path.string() + "'");
  out << meta.dump(2) << '\n';
}

/// Geodesic graph as a three-column edge list, one row per stored pair,
/// sorted by (i, j) so identical graphs serialize to identical bytes.
inline void write_geodesic_csv(const GeodesicGraph& graph,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "i,j,t\n";
  for (const auto& [key, entry] : graph.entries())
    out << key.first << ',' << key.second << ',' << format_double(entry.t) << '\n';
  if (!out) throw DataError("failed while writing '" + path.string() + "'");
}

inline void write_geodesic_provenance(const GeodesicGraph& graph,
                                      const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["n"] = graph.n();
  doc["conflicts"] = graph.conflicts();
  doc["skips"] = graph.skips();
  doc["log"] = graph.log();
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, entry] : graph.entries()) {
    entries.push_back({{"i", key.first},
                       {"j", key.second},
                       {"t", entry.t},
                       {"source", entry.provenance.source},
                       {"momentum_id", entry.provenance.momentum_id},
                       {"estimator", to_string(entry.provenance.estimator)}});
  }
  doc["entries"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
}

/// Reads an i,j,t edge list back into a GeodesicGraph (provenance is not
/// recoverable from the CSV; entries are marked as re-ingested).
inline GeodesicGraph read_geodesic_csv(const std::filesystem::path& path, Index n_hint = 0) {
  CsvTable table = read_csv(path, true);
  if (table.values.cols() != 3)
    throw DataError("'" + path.string() + "': geodesic edge list needs exactly 3 columns");
  Index n = n_hint;
  for (Index r = 0; r < table.values.rows(); ++r)
    n = std::max({n, static_cast<Index>(table.values(r, 0)) + 1,
                  static_cast<Index>(table.values(r, 1)) + 1});
  GeodesicGraph graph(std::max<Index>(n, 2));
  for (Index r = 0; r < table.values.rows(); ++r) {
    const double fi = table.values(r, 0), fj = table.values(r, 1);
    if (fi != std::floor(fi) || fj != std::floor(fj))
      throw ParseError("edge endpoints must be integers", static_cast<std::size_t>(r) + 2);
    const auto i = static_cast<Index>(fi);
    const auto j = static_cast<Index>(fj);
    graph.insert(i, j, table.values(r, 2), {i, -1, EndpointEstimator::expected_position});
  }
  return graph;
}

/// Packet profile rows for plotting.  Circle-sampled clouds report the
/// intrinsic angle, anything else the sample index.  With `series` set the
/// first column names the series (long/tidy layout for overlays).
inline void write_profile_csv(std::ostream& out, const PointCloud& cloud,
                              const Vector& profile, const std::string& series = {}) {
  const bool angled = cloud.source_tag == Manifold::circle && cloud.intrinsic &&
                      cloud.intrinsic->cols() == 1;
  for (Index j = 0; j < profile.size(); ++j) {
    if (!series.empty()) out << series << ',';
    if (angled)
      out << format_double((*cloud.intrinsic)(j, 0));
    else
      out << j;
    out << ',' << format_double(profile(j)) << '\n';
  }
}

} // namespace qgeo

#endif // QGEO_CSV_HPP
