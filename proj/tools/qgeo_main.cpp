// qgeo: wave-packet geometry on point clouds.
//
// Subcommands cover the full chain: sample a manifold, propagate a packet,
// sweep packets into a geodesic edge list, scan a phase-space spectrogram,
// lay the graph out, cluster the layout, or do everything in one run with a
// manifest.  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgeo/qgeo.hpp"

namespace {

using namespace qgeo;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated number list");
  return out;
}

SourceSelection parse_sources(const std::string& text) {
  SourceSelection s;
  if (text == "all") {
    s.kind = SourceSelection::Kind::all;
    return s;
  }
  if (text.rfind("stride:", 0) == 0) {
    s.kind = SourceSelection::Kind::stride;
    s.stride = std::stol(text.substr(7));
    return s;
  }
  s.kind = SourceSelection::Kind::list;
  for (const double v : parse_double_list(text)) {
    if (v != std::floor(v)) throw std::invalid_argument("source indices must be integers");
    s.indices.push_back(static_cast<Index>(v));
  }
  return s;
}

/// Loads a point cloud, restoring the sampler tag (and, for clean circles,
/// the intrinsic angle) from the sidecar written by `sample` when present.
PointCloud load_cloud(const std::string& path, bool has_header, bool standardize) {
  PointCloud cloud = ingest_csv(path, has_header, standardize);
  const std::filesystem::path meta = meta_path_for(path);
  if (std::filesystem::exists(meta) && !standardize) {
    try {
      nlohmann::json j;
      std::ifstream in(meta);
      in >> j;
      if (const auto tag = manifold_from_string(j.value("source_tag", "csv"))) {
        if (*tag == Manifold::circle && cloud.dim() == 2) {
          cloud.source_tag = Manifold::circle;
          cloud.intrinsic.emplace(cloud.n(), 1);
          for (Index i = 0; i < cloud.n(); ++i) {
            double theta = std::atan2(cloud.points(i, 1), cloud.points(i, 0));
            if (theta < 0.0) theta += 2.0 * pi;
            (*cloud.intrinsic)(i, 0) = theta;
          }
        } else if (*tag != Manifold::csv) {
          cloud.source_tag = *tag;
        }
      }
    } catch (const nlohmann::json::exception&) {
      // Unreadable sidecar: treat the file as a bare feature table.
    }
  }
  return cloud;
}

double resolve_epsilon(const std::string& text, const PointCloud& cloud) {
  if (text == "auto") return auto_epsilon(cloud);
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw std::invalid_argument("--epsilon expects a number or 'auto'");
  }
}

SpectralLaplacian laplacian_for(const PointCloud& cloud, double epsilon, KernelKind kind,
                                double truncation_multiple, const std::string& cache_file) {
  if (!cache_file.empty()) {
    const std::uint64_t key = laplacian_cache_key(cloud, epsilon, kind, truncation_multiple);
    if (auto cached = load_laplacian(cache_file, key)) return std::move(*cached);
    SpectralLaplacian lap = build_laplacian(build_kernel(cloud, epsilon, kind, truncation_multiple));
    save_laplacian(lap, key, cache_file);
    return lap;
  }
  return build_laplacian(build_kernel(cloud, epsilon, kind, truncation_multiple));
}

KernelKind parse_kernel(const std::string& text) {
  const auto k = kernel_kind_from_string(text);
  if (!k) throw std::invalid_argument("unknown kernel '" + text + "'");
  return *k;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw DataError("cannot open '" + path + "' for writing");
  return file;
}

// ---------------------------------------------------------------------------

int cmd_sample(const std::string& manifold, Index n, const std::string& spacing,
               std::uint64_t seed, double noise, double major, double minor,
               const std::string& out) {
  PointCloud cloud;
  nlohmann::json params;
  if (manifold == "circle") {
    const Spacing sp = spacing == "random" ? Spacing::uniform_random : Spacing::regular;
    cloud = sample_circle(n, sp, seed);
    params["spacing"] = spacing;
  } else if (manifold == "sphere") {
    cloud = sample_sphere(n, seed);
  } else if (manifold == "torus") {
    cloud = sample_torus(n, major, minor, seed);
    params["major_radius"] = major;
    params["minor_radius"] = minor;
  } else {
    throw std::invalid_argument("unknown manifold '" + manifold + "'");
  }
  const Manifold tag = cloud.source_tag;
  if (noise > 0.0) {
    cloud = add_noise(cloud, noise, seed);
    params["noise"] = noise;
    params["noise_base"] = to_string(tag);
  }
  write_point_cloud_csv(cloud, out, seed, params);
  std::cerr << "wrote " << cloud.n() << " points (" << to_string(cloud.source_tag)
            << ") to " << out << "\n";
  return 0;
}

int cmd_propagate(const std::string& data, bool has_header, bool standardize,
                  Index source, double t, const std::string& epsilon_text, double alpha,
                  double h_override, const std::string& momentum_text, int pca_k, int axis,
                  const std::string& orient_text, double t_max, const std::string& kernel_text,
                  const std::string& cache_file, bool fig2, const std::string& out_path) {
  const PointCloud cloud = load_cloud(data, has_header, standardize);
  const double epsilon = resolve_epsilon(epsilon_text, cloud);
  const SpectralLaplacian lap =
      laplacian_for(cloud, epsilon, parse_kernel(kernel_text), 9.0, cache_file);
  const double h = h_override > 0.0 ? h_override : uncertainty_from_scale(epsilon, alpha);

  std::optional<Vector> orient;
  if (!orient_text.empty()) {
    const auto values = parse_double_list(orient_text);
    orient.emplace(Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size())));
  }
  if (fig2 && !orient && cloud.source_tag == Manifold::circle && cloud.intrinsic) {
    // Forward tangent at the source: the packet should travel toward
    // increasing angle.
    const double theta = (*cloud.intrinsic)(source, 0);
    orient.emplace(2);
    (*orient)(0) = -std::sin(theta);
    (*orient)(1) = std::cos(theta);
  }

  MomentumEstimator est;
  const auto method = momentum_method_from_string(momentum_text);
  if (!method) throw std::invalid_argument("--momentum expects 'nn' or 'pca'");
  est.method = *method;
  est.neighborhood_size = pca_k;
  est.principal_axis_index = axis;
  est.radius = 3.0 * std::sqrt(epsilon);

  PhaseSpacePoint zeta;
  zeta.base_index = source;
  zeta.momentum = estimate_momentum(cloud, source, est, orient);
  zeta.h = h;

  const PropagationResult result = propagate(lap, cloud, zeta, t, t_max);

  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  const bool angled = cloud.source_tag == Manifold::circle && cloud.intrinsic;
  if (fig2) {
    if (!angled)
      throw DataError("--fig2 needs circle-tagged data (angles are the plot axis)");
    // Three overlaid series: the raw impulse response, the coherent packet,
    // and ideal arrival markers at angle(source) +/- t.
    const StateVector delta = prepare_impulse(cloud, source);
    const PropagationResult delta_result = propagate_state(lap, cloud, delta, t, t_max);
    Vector reference = Vector::Zero(cloud.n());
    const double theta = (*cloud.intrinsic)(source, 0);
    for (const double target : {theta + t, theta - t}) {
      Index best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < cloud.n(); ++j) {
        const double d = std::fabs(std::remainder((*cloud.intrinsic)(j, 0) - target, 2.0 * pi));
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      reference(best) = 1.0;
    }
    out << "series,angle,value\n";
    write_profile_csv(out, cloud, wavepacket_profile(delta_result), "delta");
    write_profile_csv(out, cloud, wavepacket_profile(result), "coherent");
    write_profile_csv(out, cloud, reference, "reference");
  } else {
    out << (angled ? "angle,value\n" : "index,value\n");
    write_profile_csv(out, cloud, wavepacket_profile(result));
  }

  std::cerr << "t=" << t << " snapped=" << result.snapped_index
            << " max=" << result.max_position_index
            << " delocalized=" << (result.delocalized ? "yes" : "no")
            << " norm=" << conserved_norm(lap, result.state_t) << "\n";
  return 0;
}

int cmd_geodesics(const std::string& data, bool has_header, bool standardize,
                  const std::string& epsilon_text, double alpha,
                  const std::string& schedule_text, const std::string& sources_text,
                  int momenta, const std::string& estimator_text, int pca_k,
                  int intrinsic_dim, std::uint64_t seed, double t_max,
                  const std::string& kernel_text, const std::string& cache_file,
                  const std::string& out) {
  const PointCloud cloud = load_cloud(data, has_header, standardize);
  const double epsilon = resolve_epsilon(epsilon_text, cloud);
  const SpectralLaplacian lap =
      laplacian_for(cloud, epsilon, parse_kernel(kernel_text), 9.0, cache_file);
  const double h = uncertainty_from_scale(epsilon, alpha);

  const auto estimator = estimator_from_string(estimator_text);
  if (!estimator) throw std::invalid_argument("--estimator expects 'expected' or 'max'");

  GeodesicBuildOptions opts;
  opts.intrinsic_dim = intrinsic_dim;
  opts.pca_neighborhood = pca_k;
  opts.t_max = t_max;
  opts.seed = seed;
  opts.estimator = *estimator;

  const GeodesicGraph graph =
      build_geodesic_graph(lap, cloud, parse_sources(sources_text).resolve(cloud.n()),
                           momenta, parse_double_list(schedule_text), h, opts);
  write_geodesic_csv(graph, out);
  write_geodesic_provenance(graph, std::filesystem::path(out).replace_extension(".provenance.json"));
  std::cerr << "wrote " << graph.size() << " edges to " << out << " (conflicts "
            << graph.conflicts() << ", skips " << graph.skips() << ")\n";
  return 0;
}

int cmd_spectrogram(const std::string& data, bool has_header, bool standardize,
                    Index source, double t, const std::string& epsilon_text, double alpha,
                    double h_override, Index stride, int axes, int pca_k, double p_max,
                    int p_steps, bool forward, const std::string& kernel_text,
                    const std::string& cache_file, const std::string& out_path) {
  const PointCloud cloud = load_cloud(data, has_header, standardize);
  const double epsilon = resolve_epsilon(epsilon_text, cloud);
  const SpectralLaplacian lap =
      laplacian_for(cloud, epsilon, parse_kernel(kernel_text), 9.0, cache_file);
  const double h = h_override > 0.0 ? h_override : uncertainty_from_scale(epsilon, alpha);

  const PhaseSpaceGrid grid = make_phase_space_grid(
      cloud, h, stride, 3.0 * std::sqrt(epsilon), axes, pca_k, p_max, p_steps);
  const Spectrogram spec =
      spectrogram(lap, cloud, source, t, grid,
                  forward ? PropagationSign::forward : PropagationSign::backward);

  // Rows ordered position-major; multiple tangent axes collapse to their max
  // so the table stays three columns wide.
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  const bool angled = cloud.source_tag == Manifold::circle && cloud.intrinsic;
  out << "position,momentum,value\n";
  const Index S = spec.grid.n_scalars();
  for (Index p = 0; p < spec.grid.n_positions(); ++p) {
    const Index row = spec.grid.positions[static_cast<std::size_t>(p)];
    for (Index m = 0; m < S; ++m) {
      double value = 0.0;
      for (Index a = 0; a < spec.grid.n_axes(); ++a)
        value = std::max(value, spec.at(p, a, m));
      if (angled)
        out << format_double((*cloud.intrinsic)(row, 0));
      else
        out << row;
      out << ',' << format_double(spec.grid.scalars(m)) << ',' << format_double(value)
          << '\n';
    }
  }
  return 0;
}

int cmd_embed(const std::string& graph_path, int dim, int iterations, std::uint64_t seed,
              double temperature, const std::string& out) {
  const GeodesicGraph graph = read_geodesic_csv(graph_path);
  FrOptions opts;
  opts.d_embed = dim;
  opts.iterations = iterations;
  opts.seed = seed;
  opts.initial_temperature = temperature;
  const EmbeddingResult embedding = fr_embed(graph, opts);

  Matrix table(embedding.coordinates.rows(), embedding.coordinates.cols() + 1);
  for (Index i = 0; i < table.rows(); ++i) table(i, 0) = static_cast<double>(i);
  table.rightCols(embedding.coordinates.cols()) = embedding.coordinates;
  std::vector<std::string> header{"index", "x", "y", "z"};
  header.resize(static_cast<std::size_t>(dim) + 1);
  write_matrix_csv(out, table, header);
  std::cerr << "embedded " << table.rows() << " nodes (" << embedding.n_components
            << " component(s), stress " << embedding.stress << ") to " << out << "\n";
  return 0;
}

int cmd_cluster(const std::string& embedding_path, const std::string& data_path,
                bool has_header, bool standardize, int k, int restarts,
                std::uint64_t seed, const std::string& out,
                const std::string& summaries_path) {
  const CsvTable table = read_csv(embedding_path, true);
  if (table.values.cols() < 2)
    throw DataError("embedding file needs an index column plus coordinates");
  const Matrix coords = table.values.rightCols(table.values.cols() - 1);

  KmeansOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  const ClusterAssignment assignment = kmeans(coords, k, opts);

  Matrix out_table(coords.rows(), table.values.cols() + 1);
  out_table.leftCols(table.values.cols()) = table.values;
  for (Index i = 0; i < coords.rows(); ++i)
    out_table(i, out_table.cols() - 1) =
        static_cast<double>(assignment.labels[static_cast<std::size_t>(i)]);
  std::vector<std::string> header = table.header;
  header.push_back("cluster");
  write_matrix_csv(out, out_table, header);

  if (!summaries_path.empty()) {
    if (data_path.empty())
      throw std::invalid_argument("--summaries needs --data for the original feature space");
    const PointCloud cloud = load_cloud(data_path, has_header, standardize);
    const Matrix summaries = cluster_summaries(cloud, assignment);
    Matrix stable(summaries.rows(), summaries.cols() + 1);
    for (Index c = 0; c < stable.rows(); ++c) stable(c, 0) = static_cast<double>(c);
    stable.rightCols(summaries.cols()) = summaries;
    std::vector<std::string> sheader{"cluster"};
    for (Index c = 0; c < summaries.cols(); ++c) sheader.push_back("dim_" + std::to_string(c));
    write_matrix_csv(summaries_path, stable, sheader);
  }
  std::cerr << "clustered " << coords.rows() << " points into " << k
            << " groups (inertia " << assignment.inertia << ")\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"wave-packet geometry on point clouds"};
  app.require_subcommand(1);

  try {
    // --- sample ---
    auto* sample = app.add_subcommand("sample", "generate a manifold point cloud");
    std::string s_manifold, s_spacing = "regular", s_out = "cloud.csv";
    Index s_n = 1000;
    std::uint64_t s_seed = 0;
    double s_noise = 0.0, s_major = 2.0, s_minor = 0.5;
    sample->add_option("--manifold", s_manifold, "circle | sphere | torus")->required();
    sample->add_option("--n", s_n, "number of points")->required();
    sample->add_option("--spacing", s_spacing, "circle only: regular | random");
    sample->add_option("--seed", s_seed, "RNG seed");
    sample->add_option("--noise", s_noise, "ambient Gaussian noise fraction");
    sample->add_option("--major", s_major, "torus major radius");
    sample->add_option("--minor", s_minor, "torus minor radius");
    sample->add_option("-o,--out", s_out, "output CSV path");

    // --- propagate ---
    auto* propagate = app.add_subcommand("propagate", "evolve one packet and dump its profile");
    std::string p_data, p_epsilon = "auto", p_momentum = "pca", p_orient, p_kernel =
        "truncated_gaussian", p_cache, p_out;
    bool p_header = true, p_standardize = false, p_fig2 = false;
    Index p_source = 0;
    double p_t = 0.0, p_alpha = 1.0, p_h = -1.0, p_tmax = default_t_max();
    int p_pca_k = 10, p_axis = 0;
    propagate->add_option("--data", p_data, "input cloud CSV")->required();
    propagate->add_flag("!--no-header", p_header, "input has no header row");
    propagate->add_flag("--standardize", p_standardize, "standardize columns on load");
    propagate->add_option("--source", p_source, "launch sample index")->required();
    propagate->add_option("--t", p_t, "propagation time")->required();
    propagate->add_option("--epsilon", p_epsilon, "kernel scale or 'auto'");
    propagate->add_option("--alpha", p_alpha, "packet width exponent (h = eps^{1/(2+alpha)})");
    propagate->add_option("--h", p_h, "explicit packet width (overrides --alpha)");
    propagate->add_option("--momentum", p_momentum, "momentum estimator: nn | pca");
    propagate->add_option("--pca-k", p_pca_k, "PCA neighborhood size");
    propagate->add_option("--axis", p_axis, "PCA principal axis index");
    propagate->add_option("--orient", p_orient, "orientation hint, comma-separated components");
    propagate->add_option("--t-max", p_tmax, "largest admissible time");
    propagate->add_option("--kernel", p_kernel, "gaussian | truncated_gaussian");
    propagate->add_option("--cache", p_cache, "Laplacian cache file (read/write)");
    propagate->add_flag("--fig2", p_fig2, "emit delta/coherent/reference series");
    propagate->add_option("-o,--out", p_out, "output CSV path (default stdout)");

    // --- geodesics ---
    auto* geodesics = app.add_subcommand("geodesics", "sweep packets into a geodesic edge list");
    std::string g_data, g_epsilon = "auto", g_schedule = "0.6,1.2", g_sources = "all",
        g_estimator = "expected", g_kernel = "truncated_gaussian", g_cache,
        g_out = "geodesics.csv";
    bool g_header = true, g_standardize = false;
    double g_alpha = 1.0, g_tmax = default_t_max();
    int g_momenta = 2, g_pca_k = 10, g_dim = 2;
    std::uint64_t g_seed = 0;
    geodesics->add_option("--data", g_data, "input cloud CSV")->required();
    geodesics->add_flag("!--no-header", g_header, "input has no header row");
    geodesics->add_flag("--standardize", g_standardize, "standardize columns on load");
    geodesics->add_option("--epsilon", g_epsilon, "kernel scale or 'auto'");
    geodesics->add_option("--alpha", g_alpha, "packet width exponent");
    geodesics->add_option("--t-schedule", g_schedule, "comma-separated propagation times");
    geodesics->add_option("--sources", g_sources, "all | stride:K | comma-separated indices");
    geodesics->add_option("--momenta", g_momenta, "momenta per source");
    geodesics->add_option("--estimator", g_estimator, "endpoint estimator: expected | max");
    geodesics->add_option("--pca-k", g_pca_k, "PCA neighborhood size");
    geodesics->add_option("--dim", g_dim, "tangent axes per source");
    geodesics->add_option("--seed", g_seed, "RNG seed for extra momenta");
    geodesics->add_option("--t-max", g_tmax, "largest admissible time");
    geodesics->add_option("--kernel", g_kernel, "gaussian | truncated_gaussian");
    geodesics->add_option("--cache", g_cache, "Laplacian cache file (read/write)");
    geodesics->add_option("-o,--out", g_out, "output edge list CSV");

    // --- spectrogram ---
    auto* spectro = app.add_subcommand("spectrogram", "phase-space scan of a point source");
    std::string x_data, x_epsilon = "auto", x_kernel = "truncated_gaussian", x_cache, x_out;
    bool x_header = true, x_standardize = false, x_forward = false;
    Index x_source = 0, x_stride = 1;
    double x_t = 0.0, x_alpha = 2.0, x_h = -1.0, x_pmax = 2.0;
    int x_axes = 1, x_pca_k = 10, x_steps = 41;
    spectro->add_option("--data", x_data, "input cloud CSV")->required();
    spectro->add_flag("!--no-header", x_header, "input has no header row");
    spectro->add_flag("--standardize", x_standardize, "standardize columns on load");
    spectro->add_option("--source", x_source, "point source sample index")->required();
    spectro->add_option("--t", x_t, "scan time")->required();
    spectro->add_option("--epsilon", x_epsilon, "kernel scale or 'auto'");
    spectro->add_option("--alpha", x_alpha, "window width exponent");
    spectro->add_option("--h", x_h, "explicit window width (overrides --alpha)");
    spectro->add_option("--stride", x_stride, "position grid stride");
    spectro->add_option("--axes", x_axes, "tangent axes per position");
    spectro->add_option("--pca-k", x_pca_k, "PCA neighborhood size");
    spectro->add_option("--p-max", x_pmax, "momentum ladder endpoint");
    spectro->add_option("--p-steps", x_steps, "momentum ladder rungs");
    spectro->add_flag("--forward", x_forward, "forward-time scan (default back-propagates)");
    spectro->add_option("--kernel", x_kernel, "gaussian | truncated_gaussian");
    spectro->add_option("--cache", x_cache, "Laplacian cache file (read/write)");
    spectro->add_option("-o,--out", x_out, "output CSV path (default stdout)");

    // --- embed ---
    auto* embed = app.add_subcommand("embed", "force-directed layout of a geodesic graph");
    std::string e_graph, e_out = "embedding.csv";
    int e_dim = 3, e_iterations = 300;
    std::uint64_t e_seed = 0;
    double e_temperature = -1.0;
    embed->add_option("--graph", e_graph, "geodesic edge list CSV")->required();
    embed->add_option("--dim", e_dim, "embedding dimension (2 or 3)");
    embed->add_option("--iterations", e_iterations, "layout iterations");
    embed->add_option("--seed", e_seed, "RNG seed for the initial placement");
    embed->add_option("--temperature", e_temperature, "initial step cap (<= 0: auto)");
    embed->add_option("-o,--out", e_out, "output CSV path");

    // --- cluster ---
    auto* cluster = app.add_subcommand("cluster", "k-means on an embedding");
    std::string c_embedding, c_data, c_out = "clusters.csv", c_summaries;
    bool c_header = true, c_standardize = false;
    int c_k = 5, c_restarts = 10;
    std::uint64_t c_seed = 0;
    cluster->add_option("--embedding", c_embedding, "embedding CSV (index,coords...)")->required();
    cluster->add_option("--data", c_data, "original cloud CSV, for --summaries");
    cluster->add_flag("!--no-header", c_header, "cloud CSV has no header row");
    cluster->add_flag("--standardize", c_standardize, "standardize cloud columns on load");
    cluster->add_option("--k", c_k, "number of clusters");
    cluster->add_option("--restarts", c_restarts, "k-means restarts");
    cluster->add_option("--seed", c_seed, "RNG seed");
    cluster->add_option("-o,--out", c_out, "output CSV path");
    cluster->add_option("--summaries", c_summaries, "per-cluster means CSV path");

    // --- run ---
    auto* run = app.add_subcommand("run", "full pipeline into a run directory");
    std::string r_config, r_data, r_dir = "run";
    bool r_header = true;
    std::vector<std::string> r_overrides;
    run->add_option("--config", r_config, "pipeline config JSON");
    run->add_option("--data", r_data, "input cloud CSV")->required();
    run->add_flag("!--no-header", r_header, "input has no header row");
    run->add_option("-o,--out", r_dir, "run directory");
    run->add_option("--set", r_overrides,
                    "config override key=value (repeatable); e.g. --set alpha=2");

    // --- verify ---
    auto* verify = app.add_subcommand("verify", "re-hash the artifacts of a finished run");
    std::string v_dir;
    verify->add_option("--run", v_dir, "run directory")->required();

    app.parse(argc, argv);

    if (sample->parsed())
      return cmd_sample(s_manifold, s_n, s_spacing, s_seed, s_noise, s_major, s_minor, s_out);
    if (propagate->parsed())
      return cmd_propagate(p_data, p_header, p_standardize, p_source, p_t, p_epsilon,
                           p_alpha, p_h, p_momentum, p_pca_k, p_axis, p_orient, p_tmax,
                           p_kernel, p_cache, p_fig2, p_out);
    if (geodesics->parsed())
      return cmd_geodesics(g_data, g_header, g_standardize, g_epsilon, g_alpha, g_schedule,
                           g_sources, g_momenta, g_estimator, g_pca_k, g_dim, g_seed,
                           g_tmax, g_kernel, g_cache, g_out);
    if (spectro->parsed())
      return cmd_spectrogram(x_data, x_header, x_standardize, x_source, x_t, x_epsilon,
                             x_alpha, x_h, x_stride, x_axes, x_pca_k, x_pmax, x_steps,
                             x_forward, x_kernel, x_cache, x_out);
    if (embed->parsed())
      return cmd_embed(e_graph, e_dim, e_iterations, e_seed, e_temperature, e_out);
    if (cluster->parsed())
      return cmd_cluster(c_embedding, c_data, c_header, c_standardize, c_k, c_restarts,
                         c_seed, c_out, c_summaries);
    if (run->parsed()) {
      PipelineConfig config = r_config.empty() ? PipelineConfig{}
                                               : PipelineConfig::from_file(r_config);
      for (const std::string& kv : r_overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        nlohmann::json patch = config.to_json();
        if (key == "epsilon" && value != "auto")
          patch[key] = std::stod(value);
        else if (key == "epsilon")
          patch[key] = "auto";
        else if (key == "sources")
          patch[key] = parse_sources(value).to_json();
        else if (key == "t_schedule")
          patch[key] = parse_double_list(value);
        else if (key == "kernel" || key == "estimator")
          patch[key] = value;
        else if (key == "standardize" || key == "write_cache")
          patch[key] = value == "true" || value == "1";
        else if (key == "alpha" || key == "truncation_multiple" || key == "t_max")
          patch[key] = std::stod(value);
        else if (patch.contains(key))
          patch[key] = std::stoll(value);
        else
          throw std::invalid_argument("unknown config key '" + key + "'");
        config = PipelineConfig::from_json(patch);
      }
      const PointCloud cloud = load_cloud(r_data, r_header, config.standardize);
      const RunResult result = run_pipeline(config, cloud, r_dir);
      std::cerr << "run complete: eps=" << result.epsilon_resolved << " h=" << result.h
                << " edges=" << result.graph_edges << " components=" << result.n_components
                << " stress=" << result.fr_stress << " inertia=" << result.kmeans_inertia
                << "\n";
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const VerifyReport report = verify_run(v_dir);
      if (report.ok) {
        std::cout << "ok: all artifacts match the manifest\n";
        return 0;
      }
      for (const auto& p : report.problems) std::cout << "problem: " << p << "\n";
      return 2;
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const qgeo::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const qgeo::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
