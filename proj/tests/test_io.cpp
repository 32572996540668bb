#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace qgeo;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qgeo_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

} // namespace

TEST_CASE("matrix CSV round-trips exactly", "[io]") {
  const fs::path dir = scratch("csv_roundtrip");
  Matrix m(3, 4);
  m << 0.1, -1.0 / 3.0, 1e-300, 6.02214076e23,
       0.0, -0.0, qgeo::pi, -2.5e-17,
       1.0, 123456789.123456789, -9.9e-5, 7.0;

  const std::vector<std::string> header = {"a", "b", "c", "d"};
  write_matrix_csv(dir / "m.csv", m, header);
  const CsvTable back = read_csv(dir / "m.csv", true);

  CHECK(back.header == header);
  REQUIRE(back.values.rows() == 3);
  REQUIRE(back.values.cols() == 4);
  CHECK((back.values.array() == m.array()).all());

  // Without a header the first row is data.
  write_matrix_csv(dir / "plain.csv", m);
  const CsvTable plain = read_csv(dir / "plain.csv", false);
  CHECK(plain.header.empty());
  CHECK((plain.values.array() == m.array()).all());
}

TEST_CASE("CSV reader reports malformed input precisely", "[io]") {
  const fs::path dir = scratch("csv_errors");

  spit(dir / "ragged.csv", "1,2\n3,4,5\n");
  try {
    read_csv(dir / "ragged.csv", false);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  spit(dir / "words.csv", "x,y\n1,2\n3,oops\n");
  try {
    read_csv(dir / "words.csv", true);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 2);
  }

  spit(dir / "gap.csv", "1,,3\n");
  CHECK_THROWS_AS(read_csv(dir / "gap.csv", false), ParseError);

  spit(dir / "empty.csv", "");
  CHECK_THROWS_AS(read_csv(dir / "empty.csv", false), DataError);
  spit(dir / "header_only.csv", "x,y\n");
  CHECK_THROWS_AS(read_csv(dir / "header_only.csv", true), DataError);
  CHECK_THROWS_AS(read_csv(dir / "no_such_file.csv", false), DataError);

  // Spaces around numbers, blank lines, and CRLF endings are all tolerated.
  spit(dir / "messy.csv", "1 , 2\r\n\n 3,4 \r\n");
  const CsvTable messy = read_csv(dir / "messy.csv", false);
  REQUIRE(messy.values.rows() == 2);
  CHECK(messy.values(0, 1) == 2.0);
  CHECK(messy.values(1, 0) == 3.0);
}

TEST_CASE("ingest standardizes feature columns on request", "[io]") {
  const fs::path dir = scratch("ingest");
  spit(dir / "feats.csv", "f0,f1,f2\n1,10,5\n2,20,5\n3,30,5\n4,40,5\n");

  const PointCloud raw = ingest_csv(dir / "feats.csv", true);
  CHECK(raw.source_tag == Manifold::csv);
  CHECK_FALSE(raw.intrinsic.has_value());
  CHECK(raw.n() == 4);
  CHECK(raw.points(2, 1) == 30.0);

  const PointCloud std_cloud = ingest_csv(dir / "feats.csv", true, true);
  for (Index c = 0; c < 2; ++c) {
    CHECK(std::fabs(std_cloud.points.col(c).mean()) < 1e-14);
    CHECK(std_cloud.points.col(c).squaredNorm() / 4.0 == Catch::Approx(1.0).epsilon(1e-12));
  }
  // The constant column is centered but not blown up by a zero variance.
  CHECK(std_cloud.points.col(2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("point cloud CSV carries a sidecar", "[io]") {
  const fs::path dir = scratch("sidecar");
  const PointCloud cloud = sample_circle(24, Spacing::uniform_random, 77);
  write_point_cloud_csv(cloud, dir / "cloud.csv", 77, {{"spacing", "uniform_random"}});

  const CsvTable back = read_csv(dir / "cloud.csv", true);
  CHECK(back.header == std::vector<std::string>{"dim_0", "dim_1"});
  CHECK((back.values.array() == cloud.points.array()).all());

  REQUIRE(fs::exists(dir / "cloud.meta.json"));
  const auto meta = nlohmann::json::parse(slurp(dir / "cloud.meta.json"));
  CHECK(meta["source_tag"] == "circle");
  CHECK(meta["n"] == 24);
  CHECK(meta["seed"] == 77);
  CHECK(meta["params"]["spacing"] == "uniform_random");

  CHECK(meta_path_for("runs/a/cloud.csv") == fs::path("runs/a/cloud.meta.json"));
}

TEST_CASE("geodesic edge list round-trips and is byte-stable", "[io]") {
  const fs::path dir = scratch("geodesic_csv");
  GeodesicGraph graph(9);
  const GeodesicProvenance p{0, 0, EndpointEstimator::expected_position};
  graph.insert(4, 2, 0.6, p);
  graph.insert(0, 8, 1.0 / 3.0, p);
  graph.insert(5, 6, 1.2, p);

  write_geodesic_csv(graph, dir / "edges.csv");
  write_geodesic_csv(graph, dir / "edges2.csv");
  CHECK(slurp(dir / "edges.csv") == slurp(dir / "edges2.csv"));

  // Rows come out sorted by (i, j).
  const std::string text = slurp(dir / "edges.csv");
  CHECK(text.find("0,8") < text.find("2,4"));
  CHECK(text.find("2,4") < text.find("5,6"));

  const GeodesicGraph back = read_geodesic_csv(dir / "edges.csv");
  CHECK(back.n() == 9);
  REQUIRE(back.size() == 3);
  CHECK(back.distance(2, 4) == 0.6);
  CHECK(back.distance(8, 0) == 1.0 / 3.0); // exact: %.17g round-trips
  CHECK(back.entries().at({0, 8}).provenance.momentum_id == -1);

  // The n hint can only widen the graph.
  CHECK(read_geodesic_csv(dir / "edges.csv", 50).n() == 50);

  spit(dir / "two_cols.csv", "i,j\n1,2\n");
  CHECK_THROWS_AS(read_geodesic_csv(dir / "two_cols.csv"), DataError);
  spit(dir / "frac.csv", "i,j,t\n0.5,2,0.3\n");
  CHECK_THROWS_AS(read_geodesic_csv(dir / "frac.csv"), ParseError);

  write_geodesic_provenance(graph, dir / "prov.json");
  const auto prov = nlohmann::json::parse(slurp(dir / "prov.json"));
  CHECK(prov["n"] == 9);
  CHECK(prov["entries"].size() == 3);
  CHECK(prov["conflicts"] == 0);
  CHECK(prov["entries"][0]["estimator"] == "expected");
}

TEST_CASE("profile rows use angles for circle clouds", "[io]") {
  const PointCloud circle = sample_circle(4, Spacing::regular);
  Vector profile(4);
  profile << 1.0, 0.5, 0.25, 0.125;

  std::ostringstream angled;
  write_profile_csv(angled, circle, profile);
  std::istringstream lines(angled.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "0,1");
  std::getline(lines, line);
  CHECK(line.substr(0, 6) == format_double(pi / 2.0).substr(0, 6));

  // A cloud without intrinsic coordinates falls back to the sample index.
  PointCloud bare = circle;
  bare.intrinsic.reset();
  std::ostringstream indexed;
  write_profile_csv(indexed, bare, profile);
  CHECK(indexed.str().substr(0, 4) == "0,1\n");

  // Series-labeled rows for overlay plots.
  std::ostringstream tagged;
  write_profile_csv(tagged, bare, profile, "delta");
  CHECK(tagged.str().substr(0, 8) == "delta,0,");
}

TEST_CASE("laplacian cache restores the decomposition bit for bit", "[io]") {
  const fs::path dir = scratch("cache");
  const PointCloud cloud = sample_circle(40, Spacing::regular);
  const double eps = 0.05;
  const SpectralLaplacian lap =
      build_laplacian(build_kernel(cloud, eps, KernelKind::truncated_gaussian));
  const std::uint64_t key =
      laplacian_cache_key(cloud, eps, KernelKind::truncated_gaussian, 9.0);

  save_laplacian(lap, key, dir / "lap.bin");
  const auto loaded = load_laplacian(dir / "lap.bin", key);
  REQUIRE(loaded.has_value());
  CHECK(loaded->epsilon == lap.epsilon);
  CHECK((loaded->eigenvalues.array() == lap.eigenvalues.array()).all());
  CHECK((loaded->d_half.array() == lap.d_half.array()).all());
  CHECK((loaded->eigenvectors_sym.array() == lap.eigenvectors_sym.array()).all());

  // Wrong key, truncated payload, bad magic, missing file: all cache misses.
  CHECK_FALSE(load_laplacian(dir / "lap.bin", key + 1).has_value());
  const std::string bytes = slurp(dir / "lap.bin");
  spit(dir / "short.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_FALSE(load_laplacian(dir / "short.bin", key).has_value());
  std::string mangled = bytes;
  mangled[0] = 'X';
  spit(dir / "mangled.bin", mangled);
  CHECK_FALSE(load_laplacian(dir / "mangled.bin", key).has_value());
  CHECK_FALSE(load_laplacian(dir / "absent.bin", key).has_value());
}

TEST_CASE("cache keys track every kernel parameter", "[io]") {
  const PointCloud cloud = sample_circle(30, Spacing::regular);
  const std::uint64_t base =
      laplacian_cache_key(cloud, 0.05, KernelKind::truncated_gaussian, 9.0);

  CHECK(base == laplacian_cache_key(cloud, 0.05, KernelKind::truncated_gaussian, 9.0));
  CHECK(base != laplacian_cache_key(cloud, 0.051, KernelKind::truncated_gaussian, 9.0));
  CHECK(base != laplacian_cache_key(cloud, 0.05, KernelKind::gaussian, 9.0));
  CHECK(base != laplacian_cache_key(cloud, 0.05, KernelKind::truncated_gaussian, 4.0));

  PointCloud moved = cloud;
  moved.points(7, 0) += 1e-9;
  CHECK(base != laplacian_cache_key(moved, 0.05, KernelKind::truncated_gaussian, 9.0));
}

TEST_CASE("source selections resolve and serialize", "[io]") {
  SourceSelection all;
  CHECK(all.resolve(5) == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(all.to_json() == nlohmann::json("all"));

  SourceSelection strided;
  strided.kind = SourceSelection::Kind::stride;
  strided.stride = 4;
  CHECK(strided.resolve(10) == std::vector<Index>{0, 4, 8});
  CHECK(strided.to_json()["stride"] == 4);
  strided.stride = 0;
  CHECK_THROWS_AS(strided.resolve(10), std::invalid_argument);

  SourceSelection listed;
  listed.kind = SourceSelection::Kind::list;
  listed.indices = {3, 1, 4};
  CHECK(listed.resolve(5) == std::vector<Index>{3, 1, 4});
  CHECK_THROWS_AS(listed.resolve(4), std::invalid_argument);
  listed.indices.clear();
  CHECK_THROWS_AS(listed.resolve(5), std::invalid_argument);

  CHECK(SourceSelection::from_json("all").kind == SourceSelection::Kind::all);
  CHECK(SourceSelection::from_json({{"stride", 7}}).stride == 7);
  CHECK(SourceSelection::from_json({0, 2}).indices == std::vector<Index>{0, 2});
  CHECK_THROWS_AS(SourceSelection::from_json("some"), DataError);
  CHECK_THROWS_AS(SourceSelection::from_json(5), DataError);
}

TEST_CASE("pipeline config round-trips through JSON", "[io]") {
  PipelineConfig config;
  config.epsilon = 0.02;
  config.alpha = 2.0;
  config.t_schedule = {0.4, 0.9};
  config.sources.kind = SourceSelection::Kind::stride;
  config.sources.stride = 3;
  config.estimator = EndpointEstimator::max_amplitude;
  config.d_embed = 2;
  config.seed = 123;
  config.write_cache = true;

  const PipelineConfig back = PipelineConfig::from_json(config.to_json());
  CHECK(back.epsilon == 0.02);
  CHECK(back.alpha == 2.0);
  CHECK(back.t_schedule == config.t_schedule);
  CHECK(back.sources.kind == SourceSelection::Kind::stride);
  CHECK(back.sources.stride == 3);
  CHECK(back.estimator == EndpointEstimator::max_amplitude);
  CHECK(back.d_embed == 2);
  CHECK(back.seed == 123);
  CHECK(back.write_cache);

  // "auto" epsilon survives the trip as "unset".
  PipelineConfig auto_eps;
  CHECK(auto_eps.to_json()["epsilon"] == "auto");
  CHECK_FALSE(PipelineConfig::from_json(auto_eps.to_json()).epsilon.has_value());

  // Defaults come from an empty object.
  const PipelineConfig defaults = PipelineConfig::from_json(nlohmann::json::object());
  CHECK(defaults.alpha == 1.0);
  CHECK(defaults.kernel == KernelKind::truncated_gaussian);
  CHECK(defaults.k_clusters == 5);

  CHECK_THROWS_AS(PipelineConfig::from_json({{"epsilon", -1.0}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"epsilon", "anything"}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"alpha", 0.5}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"alpha", "x"}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"kernel", "sinc"}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"estimator", "mode"}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"t_schedule", {0.9, 0.4}}}), DataError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"d_embed", 7}}), DataError);

  const fs::path dir = scratch("config_file");
  CHECK_THROWS_AS(PipelineConfig::from_file(dir / "missing.json"), DataError);
  spit(dir / "broken.json", "{not json");
  CHECK_THROWS_AS(PipelineConfig::from_file(dir / "broken.json"), DataError);
  spit(dir / "good.json", R"({"alpha": 1.5, "seed": 9})");
  const PipelineConfig from_file = PipelineConfig::from_file(dir / "good.json");
  CHECK(from_file.alpha == 1.5);
  CHECK(from_file.seed == 9);
}

TEST_CASE("a small pipeline run produces a verifiable bundle", "[io][slow]") {
  const fs::path dir1 = scratch("run1");
  const fs::path dir2 = scratch("run2");

  // Wide packets on a thin ring delocalize, so stay at a sampling density
  // where the packet peak clears the spread-mass guard.
  const PointCloud cloud = sample_circle(400, Spacing::regular);
  PipelineConfig config;
  config.intrinsic_dim = 1;
  config.t_schedule = {0.6};
  config.d_embed = 2;
  config.fr_iterations = 150;
  config.k_clusters = 3;
  config.kmeans_restarts = 4;
  config.seed = 11;
  config.write_cache = true;

  const RunResult result = run_pipeline(config, cloud, dir1);

  CHECK(result.epsilon_resolved > 0.0);
  CHECK(result.h > std::sqrt(result.epsilon_resolved));
  CHECK(result.graph_edges > 300);
  CHECK(result.n_components == 1);
  CHECK(result.kmeans_inertia > 0.0);

  for (const char* name :
       {"cloud.csv", "cloud.meta.json", "laplacian.bin", "geodesics.csv",
        "geodesics.provenance.json", "embedding.csv", "clusters.csv", "summaries.csv",
        "manifest.json"})
    CHECK(fs::exists(dir1 / name));

  const auto manifest = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
  CHECK(manifest["schema"] == "qgeo-run-1");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["n"] == 400);
  CHECK(manifest["dim"] == 2);
  CHECK(manifest["epsilon_resolved"] == result.epsilon_resolved);
  CHECK(manifest["timings_ms"].contains("laplacian"));
  CHECK(manifest["embedding"]["components"] == 1);
  CHECK(manifest["laplacian_cache"] == "written");
  // The embedded config block is itself a loadable configuration.
  CHECK_NOTHROW(PipelineConfig::from_json(manifest["config"]));

  const VerifyReport good = verify_run(dir1);
  CHECK(good.ok);
  CHECK(good.problems.empty());

  // The same configuration and cloud give byte-identical data artifacts.
  run_pipeline(config, cloud, dir2);
  CHECK(slurp(dir1 / "geodesics.csv") == slurp(dir2 / "geodesics.csv"));
  CHECK(slurp(dir1 / "embedding.csv") == slurp(dir2 / "embedding.csv"));
  CHECK(slurp(dir1 / "clusters.csv") == slurp(dir2 / "clusters.csv"));

  // Re-running in place reuses the cached eigendecomposition and reproduces
  // the same downstream artifacts.
  const std::string edges_before = slurp(dir1 / "geodesics.csv");
  run_pipeline(config, cloud, dir1);
  const auto manifest2 = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
  CHECK(manifest2["laplacian_cache"] == "hit");
  CHECK(slurp(dir1 / "geodesics.csv") == edges_before);

  // Tampering and deletion are both caught.
  std::ofstream(dir1 / "embedding.csv", std::ios::app) << "tail\n";
  fs::remove(dir1 / "summaries.csv");
  const VerifyReport bad = verify_run(dir1);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.problems.size() == 2);
  bool saw_mismatch = false, saw_missing = false;
  for (const std::string& p : bad.problems) {
    if (p.find("hash mismatch for embedding.csv") != std::string::npos) saw_mismatch = true;
    if (p.find("missing artifact: summaries.csv") != std::string::npos) saw_missing = true;
  }
  CHECK(saw_mismatch);
  CHECK(saw_missing);

  CHECK_FALSE(verify_run(scratch("no_run")).ok);
}

TEST_CASE("a failing stage is recorded in the manifest", "[io][slow]") {
  const fs::path dir = scratch("run_fail");
  const PointCloud cloud = sample_circle(400, Spacing::regular);
  PipelineConfig config;
  config.intrinsic_dim = 1;
  config.t_schedule = {0.6};
  config.d_embed = 2;
  config.fr_iterations = 60;
  config.k_clusters = 2000; // more clusters than nodes: the cluster stage dies
  config.seed = 11;

  CHECK_THROWS_AS(run_pipeline(config, cloud, dir), std::invalid_argument);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["failed_stage"] == "cluster");
  // Completed stages still have verifiable artifacts on disk.
  CHECK(fs::exists(dir / "geodesics.csv"));
  const VerifyReport report = verify_run(dir);
  CHECK_FALSE(report.ok);
}
