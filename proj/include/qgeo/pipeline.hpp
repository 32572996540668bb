#ifndef QGEO_PIPELINE_HPP
#define QGEO_PIPELINE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgeo/cache.hpp"
#include "qgeo/clustering.hpp"
#include "qgeo/coherent.hpp"
#include "qgeo/csv.hpp"
#include "qgeo/embedding.hpp"
#include "qgeo/kernel.hpp"
#include "qgeo/phase_space.hpp"
#include "qgeo/propagation.hpp"
#include "qgeo/spectral.hpp"
#include "qgeo/types.hpp"

namespace qgeo {

/// Which samples act as packet launch sites.
struct SourceSelection {
  enum class Kind { all, stride, list };
  Kind kind = Kind::all;
  Index stride = 1;
  std::vector<Index> indices;

  std::vector<Index> resolve(Index n) const {
    std::vector<Index> out;
    switch (kind) {
      case Kind::all:
        out.resize(static_cast<std::size_t>(n));
        std::iota(out.begin(), out.end(), Index{0});
        break;
      case Kind::stride:
        if (stride < 1) throw std::invalid_argument("source stride must be >= 1");
        for (Index i = 0; i < n; i += stride) out.push_back(i);
        break;
      case Kind::list:
        for (const Index i : indices) {
          if (i < 0 || i >= n)
            throw std::invalid_argument("source index " + std::to_string(i) + " out of range");
          out.push_back(i);
        }
        break;
    }
    if (out.empty()) throw std::invalid_argument("source selection is empty");
    return out;
  }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::all: return "all";
      case Kind::stride: return nlohmann::json{{"stride", stride}};
      case Kind::list: return indices;
    }
    return "all";
  }

  static SourceSelection from_json(const nlohmann::json& j) {
    SourceSelection s;
    if (j.is_string()) {
      if (j.get<std::string>() != "all")
        throw DataError("sources: expected \"all\", a {\"stride\": k} object, or an index list");
      s.kind = Kind::all;
    } else if (j.is_object()) {
      s.kind = Kind::stride;
      s.stride = j.at("stride").get<Index>();
    } else if (j.is_array()) {
      s.kind = Kind::list;
      s.indices = j.get<std::vector<Index>>();
    } else {
      throw DataError("sources: expected \"all\", a {\"stride\": k} object, or an index list");
    }
    return s;
  }
};

/// Everything a full run needs, serializable to one declarative JSON file.
/// Absent epsilon means "choose from the data".
struct PipelineConfig {
  std::optional<double> epsilon;  // nullopt: auto from neighbor distances
  double alpha = 1.0;
  KernelKind kernel = KernelKind::truncated_gaussian;
  double truncation_multiple = 9.0;
  std::vector<double> t_schedule{0.6, 1.2};
  SourceSelection sources;
  int momenta_per_source = 2;
  EndpointEstimator estimator = EndpointEstimator::expected_position;
  int pca_neighborhood = 10;
  int intrinsic_dim = 2;
  double t_max = default_t_max();
  int d_embed = 3;
  int fr_iterations = 300;
  int k_clusters = 5;
  int kmeans_restarts = 10;
  std::uint64_t seed = 0;
  bool standardize = false;
  bool write_cache = false;

  void validate() const {
    if (epsilon && !(*epsilon > 0.0)) throw DataError("config: epsilon must be > 0");
    if (!(alpha >= 1.0)) throw DataError("config: alpha must be >= 1");
    if (t_schedule.empty()) throw DataError("config: t_schedule is empty");
    for (std::size_t i = 0; i < t_schedule.size(); ++i) {
      if (!(t_schedule[i] > 0.0 && t_schedule[i] <= t_max))
        throw DataError("config: t_schedule values must lie in (0, t_max]");
      if (i > 0 && !(t_schedule[i] > t_schedule[i - 1]))
        throw DataError("config: t_schedule must be strictly increasing");
    }
    if (momenta_per_source < 1) throw DataError("config: momenta_per_source must be >= 1");
    if (pca_neighborhood < 3) throw DataError("config: pca_neighborhood must be >= 3");
    if (intrinsic_dim < 1) throw DataError("config: intrinsic_dim must be >= 1");
    if (d_embed < 1 || d_embed > 3) throw DataError("config: d_embed must be 1, 2, or 3");
    if (fr_iterations < 1) throw DataError("config: fr_iterations must be >= 1");
    if (k_clusters < 1) throw DataError("config: k_clusters must be >= 1");
    if (kmeans_restarts < 1) throw DataError("config: kmeans_restarts must be >= 1");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (epsilon)
      j["epsilon"] = *epsilon;
    else
      j["epsilon"] = "auto";
    j["alpha"] = alpha;
    j["kernel"] = to_string(kernel);
    j["truncation_multiple"] = truncation_multiple;
    j["t_schedule"] = t_schedule;
    j["sources"] = sources.to_json();
    j["momenta_per_source"] = momenta_per_source;
    j["estimator"] = qgeo::to_string(estimator);
    j["pca_neighborhood"] = pca_neighborhood;
    j["intrinsic_dim"] = intrinsic_dim;
    j["t_max"] = t_max;
    j["d_embed"] = d_embed;
    j["fr_iterations"] = fr_iterations;
    j["k_clusters"] = k_clusters;
    j["kmeans_restarts"] = kmeans_restarts;
    j["seed"] = seed;
    j["standardize"] = standardize;
    j["write_cache"] = write_cache;
    return j;
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
      if (j.contains("epsilon")) {
        if (j["epsilon"].is_string()) {
          if (j["epsilon"].get<std::string>() != "auto")
            throw DataError("config: epsilon must be a number or \"auto\"");
        } else {
          c.epsilon = j["epsilon"].get<double>();
        }
      }
      if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
      if (j.contains("kernel")) {
        const auto k = kernel_kind_from_string(j["kernel"].get<std::string>());
        if (!k) throw DataError("config: unknown kernel '" + j["kernel"].get<std::string>() + "'");
        c.kernel = *k;
      }
      if (j.contains("truncation_multiple"))
        c.truncation_multiple = j["truncation_multiple"].get<double>();
      if (j.contains("t_schedule")) c.t_schedule = j["t_schedule"].get<std::vector<double>>();
      if (j.contains("sources")) c.sources = SourceSelection::from_json(j["sources"]);
      if (j.contains("momenta_per_source"))
        c.momenta_per_source = j["momenta_per_source"].get<int>();
      if (j.contains("estimator")) {
        const auto e = estimator_from_string(j["estimator"].get<std::string>());
        if (!e)
          throw DataError("config: unknown estimator '" + j["estimator"].get<std::string>() + "'");
        c.estimator = *e;
      }
      if (j.contains("pca_neighborhood")) c.pca_neighborhood = j["pca_neighborhood"].get<int>();
      if (j.contains("intrinsic_dim")) c.intrinsic_dim = j["intrinsic_dim"].get<int>();
      if (j.contains("t_max")) c.t_max = j["t_max"].get<double>();
      if (j.contains("d_embed")) c.d_embed = j["d_embed"].get<int>();
      if (j.contains("fr_iterations")) c.fr_iterations = j["fr_iterations"].get<int>();
      if (j.contains("k_clusters")) c.k_clusters = j["k_clusters"].get<int>();
      if (j.contains("kmeans_restarts")) c.kmeans_restarts = j["kmeans_restarts"].get<int>();
      if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("standardize")) c.standardize = j["standardize"].get<bool>();
      if (j.contains("write_cache")) c.write_cache = j["write_cache"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static PipelineConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("config file '" + path.string() + "': " + e.what());
    }
    return from_json(j);
  }
};

struct RunResult {
  std::filesystem::path directory;
  double epsilon_resolved = 0.0;
  double h = 0.0;
  std::size_t graph_edges = 0;
  int n_components = 1;
  double fr_stress = 0.0;
  double kmeans_inertia = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file '" + path.string() + "'");
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

} // namespace detail

/// Runs the full chain kernel -> spectrum -> geodesic sweep -> layout ->
/// clusters inside `run_dir`, writing each artifact plus a manifest that
/// records the resolved configuration, per-stage wall time, warnings, and a
/// content hash of every file.  A failing stage still writes the manifest
/// (status "failed", with the stage name) before the error propagates.
inline RunResult run_pipeline(const PipelineConfig& config, const PointCloud& cloud,
                              const std::filesystem::path& run_dir) {
  config.validate();
  cloud.validate();
  std::filesystem::create_directories(run_dir);

  RunResult result;
  result.directory = run_dir;
  nlohmann::json manifest;
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json artifacts = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string stage = "setup";

  const auto record = [&](const std::string& name, const std::filesystem::path& p) {
    artifacts[name] = {{"path", p.filename().string()},
                       {"bytes", std::filesystem::file_size(p)},
                       {"fnv1a64", detail::hex64(detail::hash_file(p))}};
  };
  const auto write_manifest = [&](const std::string& status, const std::string& failed_stage) {
    manifest["schema"] = "qgeo-run-1";
    manifest["status"] = status;
    if (!failed_stage.empty()) manifest["failed_stage"] = failed_stage;
    manifest["warnings"] = warnings;
    manifest["timings_ms"] = timings;
    manifest["artifacts"] = artifacts;
    std::ofstream out(run_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  };

  using clock = std::chrono::steady_clock;
  auto stage_start = clock::now();
  const auto finish_stage = [&](const std::string& name) {
    const auto now = clock::now();
    timings[name] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now - stage_start).count();
    stage_start = now;
    stage = name;
  };

  try {
    // Stage: capture the input cloud.
    stage = "ingest";
    write_point_cloud_csv(cloud, run_dir / "cloud.csv", config.seed);
    record("cloud.csv", run_dir / "cloud.csv");
    finish_stage("ingest");

    // Stage: kernel scale and affinity graph.
    stage = "kernel";
    result.epsilon_resolved = config.epsilon ? *config.epsilon : auto_epsilon(cloud);
    const KernelGraph graph =
        build_kernel(cloud, result.epsilon_resolved, config.kernel, config.truncation_multiple);
    manifest["epsilon_resolved"] = result.epsilon_resolved;
    finish_stage("kernel");

    // Stage: eigendecomposition (cached when requested and available).
    stage = "laplacian";
    SpectralLaplacian lap;
    const std::uint64_t cache_key = laplacian_cache_key(
        cloud, result.epsilon_resolved, config.kernel, config.truncation_multiple);
    const std::filesystem::path cache_path = run_dir / "laplacian.bin";
    bool cache_hit = false;
    if (config.write_cache) {
      if (auto cached = load_laplacian(cache_path, cache_key)) {
        lap = std::move(*cached);
        cache_hit = true;
      }
    }
    if (!cache_hit) {
      lap = build_laplacian(graph);
      if (config.write_cache) {
        save_laplacian(lap, cache_key, cache_path);
        record("laplacian.bin", cache_path);
      }
    } else {
      record("laplacian.bin", cache_path);
    }
    manifest["laplacian_cache"] = cache_hit ? "hit" : (config.write_cache ? "written" : "off");
    warnings.insert(warnings.end(), lap.warnings.begin(), lap.warnings.end());
    finish_stage("laplacian");

    // Stage: packet sweep into the geodesic edge list.
    stage = "geodesics";
    result.h = uncertainty_from_scale(result.epsilon_resolved, config.alpha);
    GeodesicBuildOptions gopts;
    gopts.intrinsic_dim = config.intrinsic_dim;
    gopts.pca_neighborhood = config.pca_neighborhood;
    gopts.t_max = config.t_max;
    gopts.seed = config.seed;
    gopts.estimator = config.estimator;
    const GeodesicGraph geo = build_geodesic_graph(
        lap, cloud, config.sources.resolve(cloud.n()), config.momenta_per_source,
        config.t_schedule, result.h, gopts);
    result.graph_edges = geo.size();
    if (geo.size() == 0) throw DataError("geodesic sweep produced no edges");
    write_geodesic_csv(geo, run_dir / "geodesics.csv");
    write_geodesic_provenance(geo, run_dir / "geodesics.provenance.json");
    record("geodesics.csv", run_dir / "geodesics.csv");
    record("geodesics.provenance.json", run_dir / "geodesics.provenance.json");
    if (geo.conflicts() > 0)
      warnings.push_back(std::to_string(geo.conflicts()) +
                         " conflicting edge estimates resolved to the smaller t");
    if (geo.skips() > 0)
      warnings.push_back(std::to_string(geo.skips()) + " propagation trials skipped");
    finish_stage("geodesics");

    // Stage: force-directed layout.
    stage = "embed";
    FrOptions fr;
    fr.d_embed = config.d_embed;
    fr.iterations = config.fr_iterations;
    fr.seed = config.seed;
    const EmbeddingResult embedding = fr_embed(geo, fr);
    result.n_components = embedding.n_components;
    result.fr_stress = embedding.stress;
    warnings.insert(warnings.end(), embedding.warnings.begin(), embedding.warnings.end());
    {
      Matrix table(embedding.coordinates.rows(), embedding.coordinates.cols() + 1);
      for (Index i = 0; i < table.rows(); ++i) table(i, 0) = static_cast<double>(i);
      table.rightCols(embedding.coordinates.cols()) = embedding.coordinates;
      std::vector<std::string> header{"index", "x", "y", "z"};
      header.resize(static_cast<std::size_t>(config.d_embed) + 1);
      write_matrix_csv(run_dir / "embedding.csv", table, header);
    }
    record("embedding.csv", run_dir / "embedding.csv");
    manifest["embedding"] = {{"stress", embedding.stress},
                             {"converged", embedding.converged},
                             {"components", embedding.n_components}};
    finish_stage("embed");

    // Stage: clusters in the embedded space, summaries in the original one.
    stage = "cluster";
    KmeansOptions km;
    km.restarts = config.kmeans_restarts;
    km.seed = config.seed;
    const ClusterAssignment assignment =
        kmeans(embedding.coordinates, config.k_clusters, km);
    result.kmeans_inertia = assignment.inertia;
    {
      Matrix table(embedding.coordinates.rows(), embedding.coordinates.cols() + 2);
      for (Index i = 0; i < table.rows(); ++i) {
        table(i, 0) = static_cast<double>(i);
        table(i, table.cols() - 1) =
            static_cast<double>(assignment.labels[static_cast<std::size_t>(i)]);
      }
      table.middleCols(1, embedding.coordinates.cols()) = embedding.coordinates;
      std::vector<std::string> header{"index", "x", "y", "z"};
      header.resize(static_cast<std::size_t>(config.d_embed) + 1);
      header.push_back("cluster");
      write_matrix_csv(run_dir / "clusters.csv", table, header);
    }
    record("clusters.csv", run_dir / "clusters.csv");

    const Matrix summaries = cluster_summaries(cloud, assignment);
    {
      Matrix table(summaries.rows(), summaries.cols() + 1);
      for (Index c = 0; c < table.rows(); ++c) table(c, 0) = static_cast<double>(c);
      table.rightCols(summaries.cols()) = summaries;
      std::vector<std::string> header{"cluster"};
      for (Index c = 0; c < summaries.cols(); ++c)
        header.push_back("dim_" + std::to_string(c));
      write_matrix_csv(run_dir / "summaries.csv", table, header);
    }
    record("summaries.csv", run_dir / "summaries.csv");
    manifest["kmeans"] = {{"k", config.k_clusters}, {"inertia", assignment.inertia}};
    finish_stage("cluster");
  } catch (...) {
    write_manifest("failed", stage);
    throw;
  }

  manifest["config"] = config.to_json();
  manifest["n"] = cloud.n();
  manifest["dim"] = cloud.dim();
  result.warnings = warnings;
  write_manifest("ok", "");
  return result;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Re-hashes every artifact listed in a run manifest and reports mismatches,
/// missing files, and runs that never completed.
inline VerifyReport verify_run(const std::filesystem::path& run_dir) {
  VerifyReport report;
  const std::filesystem::path manifest_path = run_dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) {
    report.ok = false;
    report.problems.push_back("missing manifest: " + manifest_path.string());
    return report;
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    report.ok = false;
    report.problems.push_back(std::string("unreadable manifest: ") + e.what());
    return report;
  }
  if (manifest.value("status", "") != "ok") {
    report.ok = false;
    report.problems.push_back("run status is '" + manifest.value("status", "(absent)") +
                              "', not 'ok'");
  }
  if (!manifest.contains("artifacts") || !manifest["artifacts"].is_object()) {
    report.ok = false;
    report.problems.push_back("manifest lists no artifacts");
    return report;
  }
  for (const auto& [name, meta] : manifest["artifacts"].items()) {
    const std::filesystem::path p = run_dir / meta.value("path", name);
    if (!std::filesystem::exists(p)) {
      report.ok = false;
      report.problems.push_back("missing artifact: " + name);
      continue;
    }
    const std::string expected = meta.value("fnv1a64", "");
    const std::string actual = detail::hex64(detail::hash_file(p));
    if (expected != actual) {
      report.ok = false;
      report.problems.push_back("hash mismatch for " + name + ": manifest " + expected +
                                ", file " + actual);
    }
  }
  return report;
}

} // namespace qgeo

#endif // QGEO_PIPELINE_HPP
