#pragma once

// Dataset generation, dual-PCA training, prediction and fidelity evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "oamreg/basis.hpp"
#include "oamreg/error.hpp"
#include "oamreg/optics.hpp"
#include "oamreg/parallel.hpp"
#include "oamreg/reduce.hpp"
#include "oamreg/regress.hpp"
#include "oamreg/statespace.hpp"

namespace oamreg {

enum class ImageMode { single, pair };

inline std::string_view mode_name(ImageMode m) { return m == ImageMode::single ? "single" : "pair"; }

inline ImageMode parse_mode(std::string_view s) {
  if (s == "single") return ImageMode::single;
  if (s == "pair") return ImageMode::pair;
  fail(ErrorCategory::invalid_argument, "unknown image mode '" + std::string(s) + "'");
}

enum class RegressorKind { linear, etr };

inline std::string_view regressor_name(RegressorKind k) {
  return k == RegressorKind::linear ? "linear" : "etr";
}

inline RegressorKind parse_regressor(std::string_view s) {
  if (s == "linear") return RegressorKind::linear;
  if (s == "etr") return RegressorKind::etr;
  fail(ErrorCategory::invalid_argument, "unknown regressor '" + std::string(s) + "'");
}

// Synthetic measurement imperfections, applied per channel in the order
// jitter, Poisson resampling, additive Gaussian, clamp, renormalize.
struct NoiseSpec {
  double gaussian_sigma = 0.0;  // relative to the image maximum
  std::optional<double> poisson_scale;  // expected total counts
  double center_jitter_pixels = 0.0;

  bool active() const {
    return gaussian_sigma > 0 || poisson_scale.has_value() || center_jitter_pixels > 0;
  }

  void validate() const {
    require(gaussian_sigma >= 0 && std::isfinite(gaussian_sigma), ErrorCategory::invalid_argument,
            "gaussian_sigma must be >= 0");
    require(!poisson_scale || (*poisson_scale > 0 && std::isfinite(*poisson_scale)),
            ErrorCategory::invalid_argument, "poisson_scale must be positive");
    require(center_jitter_pixels >= 0 && std::isfinite(center_jitter_pixels),
            ErrorCategory::invalid_argument, "center_jitter_pixels must be >= 0");
    require(active(), ErrorCategory::invalid_argument, "noise settings have no active component");
  }
};

struct DatasetConfig {
  ModeBasis basis{std::vector<int>{-3, -1, 1, 3}};
  int n_samples = 10000;
  BeamGeometry geometry;
  ImageMode image_mode = ImageMode::pair;
  std::optional<NoiseSpec> noise;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  SamplingLaw law = SamplingLaw::uniform_box;
  int shift = 1;

  int dimension() const { return basis.size(); }

  void validate() const {
    require(basis.size() >= 2, ErrorCategory::invalid_argument, "basis must hold >= 2 modes");
    require(n_samples >= 10, ErrorCategory::invalid_argument,
            "n_samples must be >= 10, got " + std::to_string(n_samples));
    require(train_fraction > 0 && train_fraction < 1, ErrorCategory::invalid_argument,
            "train_fraction must lie in (0, 1)");
    require(shift != 0, ErrorCategory::invalid_argument, "OAM shift must be nonzero");
    geometry.validate();
    if (noise) noise->validate();
  }
};

using ImageMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  DatasetConfig config;
  std::vector<PureState> states;  // empty for prediction-only data
  ImageMatrix primary;            // samples x pixels, unit-sum rows
  std::optional<ImageMatrix> shifted;
  Eigen::MatrixXd targets;  // samples x (d^2-1); empty without states
  std::vector<int> train;
  std::vector<int> test;

  int size() const { return static_cast<int>(primary.rows()); }
  int grid_n() const { return config.geometry.grid_n; }
  int dimension() const { return config.dimension(); }
  bool has_targets() const { return !states.empty(); }
  bool has_pair() const { return shifted.has_value(); }

  IntensityImage image(int i, bool shifted_channel = false) const {
    const ImageMatrix& m = shifted_channel ? shifted.value() : primary;
    std::vector<double> px(m.row(i).data(), m.row(i).data() + m.cols());
    return IntensityImage(grid_n(), grid_n(), std::move(px), Normalization::unit_sum);
  }

  ImagePair pair(int i) const { return ImagePair(image(i, false), image(i, true)); }
};

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    stream};
  return std::mt19937_64(seq);
}

inline void apply_noise(IntensityImage& img, const NoiseSpec& noise, std::mt19937_64& rng) {
  if (noise.poisson_scale) {
    img.normalize_unit_sum();
    for (double& p : img.pixels) {
      const double mean = p * *noise.poisson_scale;
      p = mean > 0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
    }
  }
  if (noise.gaussian_sigma > 0) {
    std::normal_distribution<double> g(0.0, noise.gaussian_sigma * img.max());
    for (double& p : img.pixels) p += g(rng);
  }
  for (double& p : img.pixels) p = std::max(p, 0.0);
  img.normalize_unit_sum();
}

inline IntensityImage render_channel(const PureState& state, const ModeFields& fields,
                                     const BeamGeometry& geom, const std::optional<NoiseSpec>& noise,
                                     std::mt19937_64& rng) {
  if (!noise) return fields.render(state.coefficients(), Normalization::unit_sum);
  IntensityImage img;
  if (noise->center_jitter_pixels > 0) {
    std::normal_distribution<double> g(0.0, noise->center_jitter_pixels * geom.pixel_size());
    BeamGeometry moved = geom;
    moved.center_x += g(rng);
    moved.center_y += g(rng);
    img = ModeFields(state.basis(), moved).render(state.coefficients(), Normalization::raw);
  } else {
    img = fields.render(state.coefficients(), Normalization::raw);
  }
  apply_noise(img, *noise, rng);
  return img;
}

inline void store_row(ImageMatrix& m, int row, const IntensityImage& img) {
  for (int k = 0; k < m.cols(); ++k) m(row, k) = static_cast<float>(img.pixels[static_cast<std::size_t>(k)]);
}

}  // namespace detail

// Seeded shuffle; both index lists are returned sorted.
inline void assign_split(Dataset& ds, std::uint64_t seed, double train_fraction) {
  const int n = ds.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = detail::stream_rng(seed, 0, 0x5b1u);
  std::shuffle(perm.begin(), perm.end(), rng);
  const int n_train = static_cast<int>(std::llround(train_fraction * n));
  require(n_train >= 1 && n_train < n, ErrorCategory::invalid_argument,
          "train/test split leaves an empty partition");
  ds.train.assign(perm.begin(), perm.begin() + n_train);
  ds.test.assign(perm.begin() + n_train, perm.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
}

inline Dataset generate_dataset(const DatasetConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  const int n = config.n_samples;
  const int npix = config.geometry.grid_n * config.geometry.grid_n;
  const ModeBasis shifted_basis = config.basis.shifted(config.shift);
  const ModeFields primary_fields(config.basis, config.geometry);
  const std::optional<ModeFields> shifted_fields =
      config.image_mode == ImageMode::pair
          ? std::optional<ModeFields>(std::in_place, shifted_basis, config.geometry)
          : std::nullopt;

  ds.states.resize(static_cast<std::size_t>(n));
  ds.primary.resize(n, npix);
  if (config.image_mode == ImageMode::pair) ds.shifted.emplace(n, npix);
  const int q = bloch_length(config.dimension());
  ds.targets.resize(n, q);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const int row = static_cast<int>(i);
    auto state_rng = detail::stream_rng(config.seed, i, 1);
    PureState psi = random_state(config.basis, config.law, state_rng);
    auto noise_rng = detail::stream_rng(config.seed, i, 2);
    detail::store_row(ds.primary, row,
                      detail::render_channel(psi, primary_fields, config.geometry, config.noise,
                                             noise_rng));
    if (shifted_fields) {
      detail::store_row(*ds.shifted, row,
                        detail::render_channel(shift_oam(psi, config.shift), *shifted_fields,
                                               config.geometry, config.noise, noise_rng));
    }
    ds.targets.row(row) = bloch_components(psi.coefficients()).transpose();
    ds.states[i] = std::move(psi);
  });
  assign_split(ds, config.seed, config.train_fraction);
  return ds;
}

// ---------------------------------------------------------------------------
// Training

// Per-channel latent counts. In pair mode a total budget T is split as
// primary = ceil(T/2), shifted = floor(T/2).
struct LatentBudget {
  int primary = 0;
  int shifted = 0;

  int total() const { return primary + shifted; }

  static LatentBudget per_channel(int n, ImageMode mode) {
    return mode == ImageMode::pair ? LatentBudget{n, n} : LatentBudget{n, 0};
  }

  static LatentBudget from_total(int total, ImageMode mode) {
    if (mode == ImageMode::single) return {total, 0};
    return {(total + 1) / 2, total / 2};
  }
};

struct FitOptions {
  LatentBudget budget{8, 8};
  std::optional<ImageMode> mode;  // defaults to the dataset's image mode
  RegressorKind regressor = RegressorKind::linear;
  LinearFitOptions linear;
  EtrOptions etr;
  PcaOptions pca;
  bool concatenated_pca = false;  // one PCA over [primary | shifted]
};

struct PipelineModel {
  ModeBasis basis;
  ImageMode mode = ImageMode::pair;
  int grid_n = 0;
  int shift = 1;
  bool concatenated = false;
  LatentBudget budget;
  PcaModel pca_primary;  // holds the joint PCA when concatenated
  std::optional<PcaModel> pca_shifted;
  RegressorKind regressor = RegressorKind::linear;
  LinearModel linear;
  EtrModel etr;
  std::uint64_t seed = 0;
  long long n_train = 0;
  long long n_test = 0;

  int dimension() const { return basis.size(); }

  int latent_dim() const {
    return pca_primary.n_components() + (pca_shifted ? pca_shifted->n_components() : 0);
  }
};

namespace detail {

inline Eigen::MatrixXd gather(const ImageMatrix& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]).cast<double>();
  }
  return out;
}

inline Eigen::MatrixXd gather_joint(const ImageMatrix& a, const ImageMatrix& b,
                                    const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), a.cols() + b.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.row(i).head(a.cols()) = a.row(rows[r]).cast<double>();
    out.row(i).tail(b.cols()) = b.row(rows[r]).cast<double>();
  }
  return out;
}

inline Eigen::MatrixXd gather_targets(const Dataset& ds, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), ds.targets.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = ds.targets.row(rows[r]);
  }
  return out;
}

inline void check_budget(const LatentBudget& b, ImageMode mode, long long n_train, int pixels) {
  require(b.primary >= 1, ErrorCategory::invalid_argument, "primary latent count must be >= 1");
  if (mode == ImageMode::pair) {
    require(b.shifted >= 1, ErrorCategory::invalid_argument,
            "pair mode needs at least one shifted-channel latent (total >= 2)");
  }
  const long long cap = std::min<long long>(n_train - 1, pixels);
  require(b.primary <= cap && b.shifted <= cap, ErrorCategory::invalid_argument,
          "latent budget exceeds min(train samples - 1, pixels) = " + std::to_string(cap));
}

}  // namespace detail

struct Prediction {
  PureState state;
  BlochVector raw;
  bool degenerate = false;
};

inline Prediction finish_prediction(const PipelineModel& model, Eigen::VectorXd raw) {
  BlochVector b(model.dimension(), std::move(raw));
  NearestPure np = nearest_pure(b, model.basis);
  return Prediction{std::move(np.state), std::move(b), np.degenerate};
}

inline Eigen::VectorXd regress_latent(const PipelineModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& z) {
  return model.regressor == RegressorKind::linear ? linpredict(model.linear, z)
                                                  : etr_predict(model.etr, z);
}

// Fits the regressor on precomputed training latents.
inline void fit_regressor(PipelineModel& model, const Eigen::MatrixXd& z, const Eigen::MatrixXd& b,
                          const FitOptions& options) {
  model.regressor = options.regressor;
  if (options.regressor == RegressorKind::linear) {
    model.linear = linfit(z, b, options.linear);
  } else {
    model.etr = etr_fit(z, b, options.etr);
  }
}

inline PipelineModel fit_pipeline(const Dataset& ds, const FitOptions& options = {}) {
  require(ds.has_targets(), ErrorCategory::incompatible, "dataset has no targets to train on");
  require(!ds.train.empty(), ErrorCategory::invalid_argument, "training split is empty");
  const ImageMode mode = options.mode.value_or(ds.config.image_mode);
  require(mode == ImageMode::single || ds.has_pair(), ErrorCategory::incompatible,
          "pair-mode training needs a dataset with shifted-channel images");
  const int pixels = static_cast<int>(ds.primary.cols());
  const auto n_train = static_cast<long long>(ds.train.size());

  PipelineModel model;
  model.basis = ds.config.basis;
  model.mode = mode;
  model.grid_n = ds.grid_n();
  model.shift = ds.config.shift;
  model.concatenated = options.concatenated_pca && mode == ImageMode::pair;
  model.seed = ds.config.seed;
  model.n_train = n_train;
  model.n_test = static_cast<long long>(ds.test.size());

  Eigen::MatrixXd z;
  if (model.concatenated) {
    const int total = options.budget.total();
    model.budget = {total, 0};
    require(total >= 1 && total <= std::min<long long>(n_train - 1, 2LL * pixels),
            ErrorCategory::invalid_argument, "latent budget infeasible for joint PCA");
    const Eigen::MatrixXd x = detail::gather_joint(ds.primary, *ds.shifted, ds.train);
    model.pca_primary = pca_fit(x, total, options.pca);
    z = model.pca_primary.transform_rows(x);
  } else {
    model.budget = mode == ImageMode::pair ? options.budget
                                           : LatentBudget{options.budget.primary, 0};
    detail::check_budget(model.budget, mode, n_train, pixels);
    Eigen::MatrixXd z1;
    {
      const Eigen::MatrixXd x = detail::gather(ds.primary, ds.train);
      model.pca_primary = pca_fit(x, model.budget.primary, options.pca);
      z1 = model.pca_primary.transform_rows(x);
    }
    if (mode == ImageMode::pair) {
      const Eigen::MatrixXd x = detail::gather(*ds.shifted, ds.train);
      model.pca_shifted = pca_fit(x, model.budget.shifted, options.pca);
      z.resize(z1.rows(), z1.cols() + model.budget.shifted);
      z << z1, model.pca_shifted->transform_rows(x);
    } else {
      z = std::move(z1);
    }
  }
  fit_regressor(model, z, detail::gather_targets(ds, ds.train), options);
  return model;
}

inline Eigen::VectorXd image_vector(const IntensityImage& img) {
  return Eigen::Map<const Eigen::VectorXd>(img.pixels.data(),
                                           static_cast<Eigen::Index>(img.pixels.size()));
}

inline void check_grid(const PipelineModel& model, const IntensityImage& img) {
  require(img.rows == model.grid_n && img.cols == model.grid_n, ErrorCategory::dimension_mismatch,
          "image is " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
              ", model expects " + std::to_string(model.grid_n) + "x" +
              std::to_string(model.grid_n));
}

inline Prediction predict_state(const PipelineModel& model, const ImagePair& images) {
  require(model.mode == ImageMode::pair, ErrorCategory::incompatible,
          "single-image model given an image pair");
  check_grid(model, images.primary);
  check_grid(model, images.shifted);
  Eigen::VectorXd z;
  if (model.concatenated) {
    Eigen::VectorXd joint(2 * images.primary.pixels.size());
    joint << image_vector(images.primary), image_vector(images.shifted);
    z = model.pca_primary.transform(joint);
  } else {
    const Eigen::VectorXd z1 = model.pca_primary.transform(image_vector(images.primary));
    const Eigen::VectorXd z2 = model.pca_shifted->transform(image_vector(images.shifted));
    z.resize(z1.size() + z2.size());
    z << z1, z2;
  }
  return finish_prediction(model, regress_latent(model, z));
}

inline Prediction predict_state(const PipelineModel& model, const IntensityImage& image) {
  require(model.mode == ImageMode::single, ErrorCategory::incompatible,
          "pair-mode model needs both image channels");
  check_grid(model, image);
  return finish_prediction(model,
                           regress_latent(model, model.pca_primary.transform(image_vector(image))));
}

// Latents of dataset rows under the model's compressors.
inline Eigen::MatrixXd dataset_latents(const PipelineModel& model, const Dataset& ds,
                                       const std::vector<int>& rows) {
  require(ds.grid_n() == model.grid_n, ErrorCategory::dimension_mismatch,
          "dataset grid does not match the model");
  if (model.mode == ImageMode::pair) {
    require(ds.has_pair(), ErrorCategory::incompatible,
            "pair-mode model needs a dataset with shifted-channel images");
  }
  if (model.concatenated) {
    return model.pca_primary.transform_rows(detail::gather_joint(ds.primary, *ds.shifted, rows));
  }
  Eigen::MatrixXd z1 = model.pca_primary.transform_rows(detail::gather(ds.primary, rows));
  if (model.mode == ImageMode::single) return z1;
  Eigen::MatrixXd z(z1.rows(), z1.cols() + model.pca_shifted->n_components());
  z << z1, model.pca_shifted->transform_rows(detail::gather(*ds.shifted, rows));
  return z;
}

inline std::vector<Prediction> predict_rows(const PipelineModel& model, const Eigen::MatrixXd& z) {
  std::vector<Prediction> out(static_cast<std::size_t>(z.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = finish_prediction(model, regress_latent(model, z.row(static_cast<Eigen::Index>(i)).transpose()));
  });
  return out;
}

enum class Against { correct, flipped };

inline std::string_view against_name(Against a) { return a == Against::correct ? "correct" : "flipped"; }

inline Against parse_against(std::string_view s) {
  if (s == "correct") return Against::correct;
  if (s == "flipped") return Against::flipped;
  fail(ErrorCategory::invalid_argument, "unknown comparison target '" + std::string(s) + "'");
}

struct FidelityStats {
  std::vector<double> fidelities;
  double mean = 0.0;
  double stderr_mean = 0.0;
  int degenerate_count = 0;

  std::size_t n() const { return fidelities.size(); }
};

inline FidelityStats summarize(std::vector<double> f, int degenerate) {
  FidelityStats s;
  s.fidelities = std::move(f);
  s.degenerate_count = degenerate;
  const auto n = static_cast<double>(s.fidelities.size());
  if (s.fidelities.empty()) return s;
  s.mean = std::accumulate(s.fidelities.begin(), s.fidelities.end(), 0.0) / n;
  if (s.fidelities.size() > 1) {
    double ss = 0.0;
    for (double v : s.fidelities) ss += (v - s.mean) * (v - s.mean);
    s.stderr_mean = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

// Fidelity of each prediction with the true state or with its
// conjugate-flipped partner.
inline FidelityStats score_predictions(const Dataset& ds, const std::vector<int>& rows,
                                       const std::vector<Prediction>& preds, Against against) {
  require(ds.has_targets(), ErrorCategory::incompatible,
          "dataset has no target states; evaluation is not possible");
  if (against == Against::flipped) {
    require(ds.config.basis.is_symmetric(), ErrorCategory::incompatible,
            "flipped comparison needs a basis symmetric under l -> -l");
  }
  std::vector<double> f(rows.size());
  int degenerate = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PureState& truth = ds.states[static_cast<std::size_t>(rows[i])];
    f[i] = against == Against::correct ? fidelity(preds[i].state, truth)
                                       : fidelity(preds[i].state, conjugate_flip(truth));
    degenerate += preds[i].degenerate ? 1 : 0;
  }
  return summarize(std::move(f), degenerate);
}

inline FidelityStats evaluate(const PipelineModel& model, const Dataset& ds,
                              Against against = Against::correct) {
  require(ds.has_targets(), ErrorCategory::incompatible,
          "dataset has no target states; evaluation is not possible");
  require(ds.config.basis == model.basis, ErrorCategory::incompatible,
          "dataset basis " + ds.config.basis.to_string() + " does not match model basis " +
              model.basis.to_string());
  const auto preds = predict_rows(model, dataset_latents(model, ds, ds.test));
  return score_predictions(ds, ds.test, preds, against);
}

}  // namespace oamreg
