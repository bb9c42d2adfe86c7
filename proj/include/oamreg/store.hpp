#pragma once

// Dataset and model directories, and ingestion of captured images.
//
// Dataset directory: manifest, primary.f32 (n x pixels), shifted.f32 (pair
// data only), and when targets are known coefficients.f64 (n x d x 2,
// real/imag) and targets.f64 (n x (d^2-1)); split in train.i64 / test.i64.
//
// Model directory: manifest plus the PCA arrays of each channel and either
// the linear weights or the flattened extra-trees ensemble.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "oamreg/basis.hpp"
#include "oamreg/error.hpp"
#include "oamreg/imagefile.hpp"
#include "oamreg/io.hpp"
#include "oamreg/optics.hpp"
#include "oamreg/pipeline.hpp"
#include "oamreg/version.hpp"

namespace oamreg {

namespace fs = std::filesystem;

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::uint64_t> shape2(Eigen::Index r, Eigen::Index c) {
  return {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)};
}

inline void write_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_array(path, shape2(m.rows(), m.cols()), rm.data());
}

inline void write_vector(const fs::path& path, const Eigen::VectorXd& v) {
  write_array(path, {static_cast<std::uint64_t>(v.size())}, v.data());
}

inline Eigen::MatrixXd read_matrix(const fs::path& path) {
  std::vector<std::uint64_t> shape;
  const std::vector<double> data = read_array<double>(path, &shape);
  require(shape.size() == 2, ErrorCategory::format, path.string() + " is not a matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      data.data(), static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1]));
}

inline Eigen::VectorXd read_vector(const fs::path& path) {
  std::vector<std::uint64_t> shape;
  const std::vector<double> data = read_array<double>(path, &shape);
  require(shape.size() == 1, ErrorCategory::format, path.string() + " is not a vector");
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(shape[0]));
}

inline void write_indices(const fs::path& path, const std::vector<int>& idx) {
  const std::vector<std::int64_t> v(idx.begin(), idx.end());
  write_array(path, {static_cast<std::uint64_t>(v.size())}, v.data());
}

inline std::vector<int> read_indices(const fs::path& path, int bound) {
  std::vector<std::uint64_t> shape;
  const std::vector<std::int64_t> v = read_array<std::int64_t>(path, &shape);
  require(shape.size() == 1, ErrorCategory::format, path.string() + " is not an index list");
  std::vector<int> out;
  out.reserve(v.size());
  for (std::int64_t x : v) {
    require(x >= 0 && x < bound, ErrorCategory::format, "index out of range in " + path.string());
    out.push_back(static_cast<int>(x));
  }
  return out;
}

inline void write_images(const fs::path& path, const ImageMatrix& m) {
  write_array(path, shape2(m.rows(), m.cols()), m.data());
}

inline ImageMatrix read_images(const fs::path& path, long long rows, long long cols) {
  std::vector<std::uint64_t> shape;
  const std::vector<float> data = read_array<float>(path, &shape);
  require(shape.size() == 2 && static_cast<long long>(shape[0]) == rows &&
              static_cast<long long>(shape[1]) == cols,
          ErrorCategory::format, path.string() + " has an unexpected shape");
  return Eigen::Map<const ImageMatrix>(data.data(), rows, cols);
}

inline void check_format(const Manifest& m, std::string_view kind, const fs::path& dir) {
  require(m.get_or("format", "") == kind, ErrorCategory::format,
          dir.string() + " is not an " + std::string(kind) + " directory");
}

inline void put_geometry(Manifest& m, const BeamGeometry& g) {
  m.set("grid_n", std::to_string(g.grid_n));
  m.set("waist", format_double(g.waist));
  m.set("wavenumber", format_double(g.wavenumber));
  m.set("plane_z", format_double(g.plane_z));
  m.set("grid_halfwidth", format_double(g.halfwidth()));
  m.set("supersample", std::to_string(g.supersample));
}

inline BeamGeometry get_geometry(const Manifest& m) {
  BeamGeometry g;
  g.grid_n = static_cast<int>(m.get_int("grid_n"));
  g.waist = m.get_double("waist");
  g.wavenumber = m.get_double("wavenumber");
  g.plane_z = m.get_double("plane_z");
  g.grid_halfwidth = m.get_double("grid_halfwidth");
  g.supersample = static_cast<int>(m.get_int("supersample"));
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

inline Manifest dataset_manifest(const Dataset& ds) {
  const DatasetConfig& c = ds.config;
  Manifest m;
  m.set("format", "oamreg-dataset");
  m.set("version", std::string(kVersion));
  m.set("dimension", std::to_string(c.dimension()));
  m.set("basis", c.basis.to_string());
  m.set("n_samples", std::to_string(ds.size()));
  m.set("image_mode", std::string(mode_name(c.image_mode)));
  m.set("shift", std::to_string(c.shift));
  detail::put_geometry(m, c.geometry);
  m.set("law", std::string(law_name(c.law)));
  m.set("seed", std::to_string(c.seed));
  m.set("train_fraction", format_double(c.train_fraction));
  m.set("n_train", std::to_string(ds.train.size()));
  m.set("n_test", std::to_string(ds.test.size()));
  m.set("has_targets", ds.has_targets() ? "true" : "false");
  if (c.noise) {
    m.set("noise_gaussian_sigma", format_double(c.noise->gaussian_sigma));
    m.set("noise_poisson_scale",
          c.noise->poisson_scale ? format_double(*c.noise->poisson_scale) : std::string("none"));
    m.set("noise_center_jitter", format_double(c.noise->center_jitter_pixels));
  }
  return m;
}

inline void save_dataset(const Dataset& ds, const fs::path& dir) {
  ensure_directory(dir);
  dataset_manifest(ds).write(dir / "manifest", "oamreg dataset");
  detail::write_images(dir / "primary.f32", ds.primary);
  if (ds.shifted) detail::write_images(dir / "shifted.f32", *ds.shifted);
  if (ds.has_targets()) {
    const int d = ds.dimension();
    std::vector<double> coeffs;
    coeffs.reserve(ds.states.size() * static_cast<std::size_t>(2 * d));
    for (const PureState& s : ds.states) {
      for (int k = 0; k < d; ++k) {
        coeffs.push_back(s.coefficients()[k].real());
        coeffs.push_back(s.coefficients()[k].imag());
      }
    }
    write_array(dir / "coefficients.f64",
                {ds.states.size(), static_cast<std::uint64_t>(d), 2}, coeffs.data());
    detail::write_matrix(dir / "targets.f64", ds.targets);
  }
  detail::write_indices(dir / "train.i64", ds.train);
  detail::write_indices(dir / "test.i64", ds.test);
}

inline Dataset load_dataset(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCategory::io, "dataset directory " + dir.string() + " not found");
  const Manifest m = Manifest::read(dir / "manifest");
  detail::check_format(m, "oamreg-dataset", dir);
  Dataset ds;
  DatasetConfig& c = ds.config;
  c.basis = ModeBasis::parse(m.get("basis"));
  require(c.dimension() == m.get_int("dimension"), ErrorCategory::format,
          "manifest dimension disagrees with its basis");
  c.n_samples = static_cast<int>(m.get_int("n_samples"));
  c.image_mode = parse_mode(m.get("image_mode"));
  c.shift = static_cast<int>(m.get_int("shift"));
  c.geometry = detail::get_geometry(m);
  c.law = parse_law(m.get("law"));
  c.seed = static_cast<std::uint64_t>(std::stoull(m.get("seed")));
  c.train_fraction = m.get_double("train_fraction");
  if (m.has("noise_gaussian_sigma")) {
    NoiseSpec noise;
    noise.gaussian_sigma = m.get_double("noise_gaussian_sigma");
    if (m.get("noise_poisson_scale") != "none") noise.poisson_scale = m.get_double("noise_poisson_scale");
    noise.center_jitter_pixels = m.get_double("noise_center_jitter");
    c.noise = noise;
  }
  const long long n = c.n_samples;
  const long long pixels = static_cast<long long>(c.geometry.grid_n) * c.geometry.grid_n;
  ds.primary = detail::read_images(dir / "primary.f32", n, pixels);
  if (c.image_mode == ImageMode::pair) ds.shifted = detail::read_images(dir / "shifted.f32", n, pixels);
  if (m.get("has_targets") == "true") {
    const int d = c.dimension();
    std::vector<std::uint64_t> shape;
    const std::vector<double> coeffs = read_array<double>(dir / "coefficients.f64", &shape);
    require(shape == std::vector<std::uint64_t>{static_cast<std::uint64_t>(n),
                                                 static_cast<std::uint64_t>(d), 2},
            ErrorCategory::format, "coefficients.f64 has an unexpected shape");
    ds.states.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
      Eigen::VectorXcd v(d);
      for (int k = 0; k < d; ++k) {
        const std::size_t at = static_cast<std::size_t>((i * d + k) * 2);
        v[k] = Complex(coeffs[at], coeffs[at + 1]);
      }
      ds.states.emplace_back(c.basis, std::move(v));
    }
    ds.targets = detail::read_matrix(dir / "targets.f64");
    require(ds.targets.rows() == n && ds.targets.cols() == bloch_length(d), ErrorCategory::format,
            "targets.f64 has an unexpected shape");
  }
  ds.train = detail::read_indices(dir / "train.i64", static_cast<int>(n));
  ds.test = detail::read_indices(dir / "test.i64", static_cast<int>(n));
  return ds;
}

// ---------------------------------------------------------------------------
// Models

namespace detail {

inline void save_pca(const PcaModel& p, const fs::path& dir, const std::string& prefix,
                     Manifest& m) {
  write_vector(dir / (prefix + "_mean.f64"), p.mean);
  write_matrix(dir / (prefix + "_components.f64"), p.components);
  write_vector(dir / (prefix + "_singular_values.f64"), p.singular_values);
  m.set(prefix + "_components", std::to_string(p.n_components()));
  m.set(prefix + "_total_variance", format_double(p.total_variance));
  m.set(prefix + "_n_samples", std::to_string(p.n_samples));
}

inline PcaModel load_pca(const fs::path& dir, const std::string& prefix, const Manifest& m,
                         bool whiten) {
  PcaModel p;
  p.mean = read_vector(dir / (prefix + "_mean.f64"));
  p.components = read_matrix(dir / (prefix + "_components.f64"));
  p.singular_values = read_vector(dir / (prefix + "_singular_values.f64"));
  p.total_variance = m.get_double(prefix + "_total_variance");
  p.n_samples = m.get_int(prefix + "_n_samples");
  p.whiten = whiten;
  require(p.components.cols() == p.mean.size() && p.components.rows() == p.singular_values.size() &&
              p.components.rows() == m.get_int(prefix + "_components"),
          ErrorCategory::format, "inconsistent PCA arrays for " + prefix);
  p.explained_variance_ratio =
      p.total_variance > 0 ? Eigen::VectorXd(p.singular_values.cwiseAbs2() / p.total_variance)
                           : Eigen::VectorXd::Zero(p.singular_values.size());
  return p;
}

}  // namespace detail

inline void save_model(const PipelineModel& model, const fs::path& dir) {
  ensure_directory(dir);
  Manifest m;
  m.set("format", "oamreg-model");
  m.set("version", std::string(kVersion));
  m.set("dimension", std::to_string(model.dimension()));
  m.set("basis", model.basis.to_string());
  m.set("mode", std::string(mode_name(model.mode)));
  m.set("grid_n", std::to_string(model.grid_n));
  m.set("shift", std::to_string(model.shift));
  m.set("concatenated_pca", model.concatenated ? "true" : "false");
  m.set("latent_primary", std::to_string(model.budget.primary));
  m.set("latent_shifted", std::to_string(model.budget.shifted));
  m.set("latent_total", std::to_string(model.latent_dim()));
  m.set("whiten", model.pca_primary.whiten ? "true" : "false");
  m.set("regressor", std::string(regressor_name(model.regressor)));
  m.set("dataset_seed", std::to_string(model.seed));
  m.set("n_train", std::to_string(model.n_train));
  m.set("n_test", std::to_string(model.n_test));
  detail::save_pca(model.pca_primary, dir, "pca_primary", m);
  if (model.pca_shifted) detail::save_pca(*model.pca_shifted, dir, "pca_shifted", m);

  if (model.regressor == RegressorKind::linear) {
    const LinearModel& lin = model.linear;
    m.set("ridge_lambda", format_double(lin.ridge_lambda));
    m.set("rank", std::to_string(lin.rank));
    m.set("rank_deficient", lin.rank_deficient ? "true" : "false");
    detail::write_matrix(dir / "linear_weights.f64", lin.weights);
    detail::write_vector(dir / "linear_intercept.f64", lin.intercept);
  } else {
    const EtrModel& etr = model.etr;
    m.set("etr_n_trees", std::to_string(etr.options.n_trees));
    m.set("etr_min_samples_split", std::to_string(etr.options.min_samples_split));
    m.set("etr_max_depth", std::to_string(etr.options.max_depth));
    m.set("etr_candidates", std::to_string(etr.options.n_candidate_features));
    m.set("etr_seed", std::to_string(etr.options.seed));
    m.set("etr_input_dim", std::to_string(etr.input_dim));
    m.set("etr_output_dim", std::to_string(etr.output_dim));
    // Per tree: node count, leaf count. Per node: feature, left, right,
    // leaf, depth, plus the threshold in a parallel array.
    std::vector<std::int64_t> sizes, nodes;
    std::vector<double> thresholds, leaves;
    for (const EtrTree& t : etr.trees) {
      sizes.push_back(static_cast<std::int64_t>(t.nodes.size()));
      sizes.push_back(static_cast<std::int64_t>(t.leaf_values.size()) / etr.output_dim);
      for (const EtrNode& n : t.nodes) {
        nodes.insert(nodes.end(), {n.feature, n.left, n.right, n.leaf, n.depth});
        thresholds.push_back(n.threshold);
      }
      leaves.insert(leaves.end(), t.leaf_values.begin(), t.leaf_values.end());
    }
    write_array(dir / "etr_trees.i64", {etr.trees.size(), 2}, sizes.data());
    write_array(dir / "etr_nodes.i64", {thresholds.size(), 5}, nodes.data());
    write_array(dir / "etr_thresholds.f64", {thresholds.size()}, thresholds.data());
    write_array(dir / "etr_leaves.f64",
                {leaves.size() / static_cast<std::uint64_t>(etr.output_dim),
                 static_cast<std::uint64_t>(etr.output_dim)},
                leaves.data());
  }
  m.write(dir / "manifest", "oamreg model");
}

inline PipelineModel load_model(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCategory::io, "model directory " + dir.string() + " not found");
  const Manifest m = Manifest::read(dir / "manifest");
  detail::check_format(m, "oamreg-model", dir);
  PipelineModel model;
  model.basis = ModeBasis::parse(m.get("basis"));
  model.mode = parse_mode(m.get("mode"));
  model.grid_n = static_cast<int>(m.get_int("grid_n"));
  model.shift = static_cast<int>(m.get_int("shift"));
  model.concatenated = m.get("concatenated_pca") == "true";
  model.budget = {static_cast<int>(m.get_int("latent_primary")),
                  static_cast<int>(m.get_int("latent_shifted"))};
  model.regressor = parse_regressor(m.get("regressor"));
  model.seed = static_cast<std::uint64_t>(std::stoull(m.get("dataset_seed")));
  model.n_train = m.get_int("n_train");
  model.n_test = m.get_int("n_test");
  const bool whiten = m.get("whiten") == "true";
  model.pca_primary = detail::load_pca(dir, "pca_primary", m, whiten);
  if (model.mode == ImageMode::pair && !model.concatenated) {
    model.pca_shifted = detail::load_pca(dir, "pca_shifted", m, whiten);
  }
  const int latent = model.latent_dim();
  const int q = bloch_length(model.dimension());

  if (model.regressor == RegressorKind::linear) {
    LinearModel& lin = model.linear;
    lin.weights = detail::read_matrix(dir / "linear_weights.f64");
    lin.intercept = detail::read_vector(dir / "linear_intercept.f64");
    lin.ridge_lambda = m.get_double("ridge_lambda");
    lin.rank = static_cast<int>(m.get_int("rank"));
    lin.rank_deficient = m.get("rank_deficient") == "true";
    require(lin.weights.rows() == q && lin.weights.cols() == latent && lin.intercept.size() == q,
            ErrorCategory::format, "linear weights do not match the model dimensions");
  } else {
    EtrModel& etr = model.etr;
    etr.options.n_trees = static_cast<int>(m.get_int("etr_n_trees"));
    etr.options.min_samples_split = static_cast<int>(m.get_int("etr_min_samples_split"));
    etr.options.max_depth = static_cast<int>(m.get_int("etr_max_depth"));
    etr.options.n_candidate_features = static_cast<int>(m.get_int("etr_candidates"));
    etr.options.seed = static_cast<std::uint64_t>(std::stoull(m.get("etr_seed")));
    etr.input_dim = static_cast<int>(m.get_int("etr_input_dim"));
    etr.output_dim = static_cast<int>(m.get_int("etr_output_dim"));
    require(etr.input_dim == latent && etr.output_dim == q, ErrorCategory::format,
            "tree ensemble does not match the model dimensions");
    std::vector<std::uint64_t> s_tr, s_nd, s_th, s_lf;
    const auto sizes = read_array<std::int64_t>(dir / "etr_trees.i64", &s_tr);
    const auto nodes = read_array<std::int64_t>(dir / "etr_nodes.i64", &s_nd);
    const auto thresholds = read_array<double>(dir / "etr_thresholds.f64", &s_th);
    const auto leaves = read_array<double>(dir / "etr_leaves.f64", &s_lf);
    require(s_tr.size() == 2 && s_tr[1] == 2 && s_nd.size() == 2 && s_nd[1] == 5 &&
                s_th.size() == 1 && s_th[0] == s_nd[0] && s_lf.size() == 2 &&
                s_lf[1] == static_cast<std::uint64_t>(q),
            ErrorCategory::format, "tree ensemble arrays have unexpected shapes");
    std::size_t node_at = 0, leaf_at = 0;
    for (std::uint64_t t = 0; t < s_tr[0]; ++t) {
      EtrTree tree;
      const auto n_nodes = static_cast<std::size_t>(sizes[2 * t]);
      const auto n_leaves = static_cast<std::size_t>(sizes[2 * t + 1]);
      require(node_at + n_nodes <= thresholds.size() && (leaf_at + n_leaves) * q <= leaves.size(),
              ErrorCategory::format, "tree ensemble arrays are truncated");
      for (std::size_t k = 0; k < n_nodes; ++k, ++node_at) {
        EtrNode n;
        n.feature = static_cast<int>(nodes[5 * node_at]);
        n.left = static_cast<int>(nodes[5 * node_at + 1]);
        n.right = static_cast<int>(nodes[5 * node_at + 2]);
        n.leaf = static_cast<int>(nodes[5 * node_at + 3]);
        n.depth = static_cast<int>(nodes[5 * node_at + 4]);
        n.threshold = thresholds[node_at];
        const bool ok = n.feature >= 0
                            ? n.feature < latent && n.left > 0 && n.right > 0 &&
                                  static_cast<std::size_t>(std::max(n.left, n.right)) < n_nodes
                            : n.leaf >= 0 && static_cast<std::size_t>(n.leaf) < n_leaves;
        require(ok, ErrorCategory::format, "malformed tree node");
        tree.nodes.push_back(n);
      }
      tree.leaf_values.assign(leaves.begin() + static_cast<std::ptrdiff_t>(leaf_at * q),
                              leaves.begin() + static_cast<std::ptrdiff_t>((leaf_at + n_leaves) * q));
      leaf_at += n_leaves;
      etr.trees.push_back(std::move(tree));
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Ingestion
//
// Manifest keys: grid (output size, default 64), mode (single|pair, default
// pair), basis (required when targets are given), crop (center|none,
// default center), seed and train_fraction for the split, and one
// `sample = <image> [<shifted image>] [| re im re im ...]` line per sample.
// Image paths are relative to the manifest. Without targets every sample
// lands in the test split and the dataset is prediction-only.

// Largest centred square.
inline IntensityImage center_square(const GrayImage& g) {
  const int side = std::min(g.width, g.height);
  const int r0 = (g.height - side) / 2;
  const int c0 = (g.width - side) / 2;
  std::vector<double> px(static_cast<std::size_t>(side) * side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      px[static_cast<std::size_t>(r) * side + c] =
          g.pixels[static_cast<std::size_t>(r0 + r) * g.width + (c0 + c)];
    }
  }
  return IntensityImage(side, side, std::move(px), Normalization::raw);
}

inline IntensityImage load_capture(const fs::path& path, int grid_n, bool crop) {
  const GrayImage g = read_gray_image(path);
  require(std::min(g.width, g.height) >= grid_n, ErrorCategory::invalid_argument,
          path.string() + " is " + std::to_string(g.width) + "x" + std::to_string(g.height) +
              ", smaller than the " + std::to_string(grid_n) + "-pixel grid");
  IntensityImage full = crop ? center_square(g)
                             : IntensityImage(g.height, g.width, g.pixels, Normalization::raw);
  require(full.sum() > 0, ErrorCategory::invalid_argument, path.string() + " is entirely dark");
  return downsample(full, grid_n);
}

inline Dataset ingest_images(const fs::path& manifest_path) {
  const Manifest m = Manifest::read(manifest_path);
  const fs::path base = manifest_path.parent_path();
  Dataset ds;
  DatasetConfig& c = ds.config;
  c.geometry.grid_n = m.has("grid") ? static_cast<int>(m.get_int("grid")) : 64;
  require(c.geometry.grid_n >= 2, ErrorCategory::format, "grid must be >= 2");
  c.image_mode = parse_mode(m.get_or("mode", "pair"));
  const std::string crop = m.get_or("crop", "center");
  require(crop == "center" || crop == "none", ErrorCategory::format, "crop must be center or none");
  c.seed = m.has("seed") ? static_cast<std::uint64_t>(m.get_int("seed")) : 0;
  c.train_fraction = m.has("train_fraction") ? m.get_double("train_fraction") : 0.8;
  const bool have_basis = m.has("basis");
  if (have_basis) c.basis = ModeBasis::parse(m.get("basis"));

  struct Line {
    std::vector<std::string> images;
    std::vector<double> values;
    bool has_values = false;
  };
  std::vector<Line> lines;
  for (const auto& [key, value] : m.entries()) {
    if (key != "sample") continue;
    Line line;
    std::string text = value;
    const auto bar = text.find('|');
    if (bar != std::string::npos) {
      line.has_values = true;
      std::istringstream vs(text.substr(bar + 1));
      std::string tok;
      while (vs >> tok) {
        double v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        require(res.ec == std::errc() && res.ptr == tok.data() + tok.size(), ErrorCategory::format,
                "bad coefficient '" + tok + "' in " + manifest_path.string());
        line.values.push_back(v);
      }
      text = text.substr(0, bar);
    }
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) line.images.push_back(tok);
    const std::size_t want = c.image_mode == ImageMode::pair ? 2 : 1;
    require(line.images.size() == want, ErrorCategory::format,
            "each sample needs " + std::to_string(want) + " image path(s) in " +
                manifest_path.string());
    lines.push_back(std::move(line));
  }
  require(!lines.empty(), ErrorCategory::format, manifest_path.string() + " lists no samples");
  const bool targets = lines.front().has_values;
  for (const Line& l : lines) {
    require(l.has_values == targets, ErrorCategory::format,
            "either every sample or no sample must carry target coefficients");
  }
  if (targets) {
    require(have_basis, ErrorCategory::format, "target coefficients need a basis key");
    for (const Line& l : lines) {
      require(l.values.size() == static_cast<std::size_t>(2 * c.dimension()), ErrorCategory::format,
              "each target needs " + std::to_string(2 * c.dimension()) + " numbers (re im pairs)");
    }
  }

  const int n = static_cast<int>(lines.size());
  const int pixels = c.geometry.grid_n * c.geometry.grid_n;
  c.n_samples = n;
  ds.primary.resize(n, pixels);
  if (c.image_mode == ImageMode::pair) ds.shifted.emplace(n, pixels);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const Line& l = lines[i];
    const int row = static_cast<int>(i);
    detail::store_row(ds.primary, row, load_capture(base / l.images[0], c.geometry.grid_n, crop == "center"));
    if (ds.shifted) {
      detail::store_row(*ds.shifted, row,
                        load_capture(base / l.images[1], c.geometry.grid_n, crop == "center"));
    }
  });
  if (targets) {
    const int d = c.dimension();
    ds.targets.resize(n, bloch_length(d));
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXcd v(d);
      const auto& vals = lines[static_cast<std::size_t>(i)].values;
      for (int k = 0; k < d; ++k) v[k] = Complex(vals[2 * k], vals[2 * k + 1]);
      ds.states.push_back(PureState::normalized(c.basis, std::move(v)));
      ds.targets.row(i) = bloch_components(ds.states.back().coefficients()).transpose();
    }
    assign_split(ds, c.seed, c.train_fraction);
  } else {
    ds.test.resize(static_cast<std::size_t>(n));
    std::iota(ds.test.begin(), ds.test.end(), 0);
  }
  return ds;
}

}  // namespace oamreg
