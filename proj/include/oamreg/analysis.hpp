#pragma once

// Latent-dimension sweeps, correct-vs-flipped symmetry analysis and the
// latent geometry of the one-qubit family.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "oamreg/pipeline.hpp"

namespace oamreg {

struct SweepOptions {
  LinearFitOptions linear;
  EtrOptions etr;
  PcaOptions pca;
};

struct SweepRow {
  int total_dims = 0;
  ImageMode mode = ImageMode::pair;
  RegressorKind regressor = RegressorKind::linear;
  int latent_primary = 0;
  int latent_shifted = 0;
  double mean_fidelity = 0.0;
  double stderr_mean = 0.0;
  long long n_test = 0;
};

namespace detail {

// PCA fitted once at the largest budget; sweep points use leading columns.
struct ChannelLatents {
  PcaModel pca;
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
};

inline ChannelLatents channel_latents(const ImageMatrix& images, const Dataset& ds, int n,
                                      const PcaOptions& options) {
  ChannelLatents out;
  {
    const Eigen::MatrixXd x = gather(images, ds.train);
    out.pca = pca_fit(x, n, options);
    out.train = out.pca.transform_rows(x);
  }
  out.test = out.pca.transform_rows(gather(images, ds.test));
  return out;
}

inline Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, int na, const Eigen::MatrixXd* b, int nb) {
  Eigen::MatrixXd out(a.rows(), na + nb);
  out.leftCols(na) = a.leftCols(na);
  if (b && nb > 0) out.rightCols(nb) = b->leftCols(nb);
  return out;
}

// A model shell sufficient for regress_latent / finish_prediction.
inline PipelineModel sweep_model(const Dataset& ds, ImageMode mode, LatentBudget budget) {
  PipelineModel m;
  m.basis = ds.config.basis;
  m.mode = mode;
  m.grid_n = ds.grid_n();
  m.shift = ds.config.shift;
  m.budget = budget;
  return m;
}

}  // namespace detail

// `dims` are total latent dimensions (summed over channels in pair mode).
inline std::vector<SweepRow> sweep_latent_dims(const Dataset& ds, std::vector<int> dims,
                                               const std::vector<RegressorKind>& regressors,
                                               const std::vector<ImageMode>& modes,
                                               const SweepOptions& options = {}) {
  require(ds.has_targets(), ErrorCategory::incompatible, "sweep needs a dataset with targets");
  require(!dims.empty() && !regressors.empty() && !modes.empty(), ErrorCategory::invalid_argument,
          "sweep needs at least one dimension, regressor and mode");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    require(dims[i] >= 1, ErrorCategory::invalid_argument, "sweep dimensions must be positive");
    require(i == 0 || dims[i] > dims[i - 1], ErrorCategory::invalid_argument,
            "sweep dimensions must be strictly ascending");
  }
  const int max_total = dims.back();
  const bool need_pair = std::find(modes.begin(), modes.end(), ImageMode::pair) != modes.end();
  const bool need_single = std::find(modes.begin(), modes.end(), ImageMode::single) != modes.end();
  require(!need_pair || ds.has_pair(), ErrorCategory::incompatible,
          "pair-mode sweep needs shifted-channel images");
  if (need_pair) {
    require(dims.front() >= 2, ErrorCategory::invalid_argument,
            "pair-mode sweep points need total dims >= 2");
  }

  const int max_primary = need_single ? max_total : LatentBudget::from_total(max_total, ImageMode::pair).primary;
  const auto n_train = static_cast<long long>(ds.train.size());
  detail::check_budget({max_primary, need_pair ? max_total / 2 : 0},
                       need_pair ? ImageMode::pair : ImageMode::single, n_train,
                       static_cast<int>(ds.primary.cols()));

  const detail::ChannelLatents primary =
      detail::channel_latents(ds.primary, ds, max_primary, options.pca);
  std::optional<detail::ChannelLatents> shifted;
  if (need_pair) shifted = detail::channel_latents(*ds.shifted, ds, max_total / 2, options.pca);

  const Eigen::MatrixXd train_targets = detail::gather_targets(ds, ds.train);
  std::vector<SweepRow> rows;
  for (ImageMode mode : modes) {
    for (RegressorKind kind : regressors) {
      for (int total : dims) {
        const LatentBudget budget = LatentBudget::from_total(total, mode);
        const Eigen::MatrixXd* sh_train = shifted ? &shifted->train : nullptr;
        const Eigen::MatrixXd* sh_test = shifted ? &shifted->test : nullptr;
        const Eigen::MatrixXd ztr = detail::hcat(primary.train, budget.primary, sh_train, budget.shifted);
        const Eigen::MatrixXd zte = detail::hcat(primary.test, budget.primary, sh_test, budget.shifted);

        PipelineModel model = detail::sweep_model(ds, mode, budget);
        FitOptions fo;
        fo.regressor = kind;
        fo.linear = options.linear;
        fo.etr = options.etr;
        fit_regressor(model, ztr, train_targets, fo);
        const FidelityStats stats =
            score_predictions(ds, ds.test, predict_rows(model, zte), Against::correct);

        SweepRow row;
        row.total_dims = total;
        row.mode = mode;
        row.regressor = kind;
        row.latent_primary = budget.primary;
        row.latent_shifted = budget.shifted;
        row.mean_fidelity = stats.mean;
        row.stderr_mean = stats.stderr_mean;
        row.n_test = static_cast<long long>(stats.n());
        rows.push_back(row);
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Symmetry analysis

// Monte-Carlo estimate of E|b_z| (last GGM component) for d = 2 under a law.
inline double expected_abs_bz(SamplingLaw law, int samples = 200000, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const ModeBasis basis({-1, 1});
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) {
    const PureState s = random_state(basis, law, rng);
    acc += std::abs(bloch_components(s.coefficients())[2]);
  }
  return acc / samples;
}

struct EquatorDiagnostic {
  double single_mean_abs_bz = 0.0;  // raw regressor outputs
  double pair_mean_abs_bz = 0.0;
  double law_mean_abs_bz = 0.0;  // Monte-Carlo expectation under the dataset law
};

struct SymmetryReport {
  int total_dims = 0;
  RegressorKind regressor = RegressorKind::linear;
  FidelityStats single_correct;
  FidelityStats single_flipped;
  FidelityStats pair_correct;
  FidelityStats pair_flipped;
  std::optional<EquatorDiagnostic> equator;  // d = 2 only
};

inline SymmetryReport symmetry_analysis(const Dataset& ds, int total_dims,
                                        RegressorKind regressor = RegressorKind::linear,
                                        const SweepOptions& options = {}) {
  require(ds.has_pair(), ErrorCategory::incompatible,
          "symmetry analysis needs a pair-mode dataset");
  require(ds.config.basis.is_symmetric(), ErrorCategory::incompatible,
          "symmetry analysis needs a basis symmetric under l -> -l");
  SymmetryReport rep;
  rep.total_dims = total_dims;
  rep.regressor = regressor;

  FitOptions fo;
  fo.regressor = regressor;
  fo.linear = options.linear;
  fo.etr = options.etr;
  fo.pca = options.pca;

  auto run = [&](ImageMode mode, FidelityStats& correct, FidelityStats& flipped) {
    fo.mode = mode;
    fo.budget = LatentBudget::from_total(total_dims, mode);
    const PipelineModel model = fit_pipeline(ds, fo);
    const auto preds = predict_rows(model, dataset_latents(model, ds, ds.test));
    correct = score_predictions(ds, ds.test, preds, Against::correct);
    flipped = score_predictions(ds, ds.test, preds, Against::flipped);
    double abs_bz = 0.0;
    for (const Prediction& p : preds) abs_bz += std::abs(p.raw.components[p.raw.components.size() - 1]);
    return abs_bz / static_cast<double>(preds.size());
  };
  const double single_bz = run(ImageMode::single, rep.single_correct, rep.single_flipped);
  const double pair_bz = run(ImageMode::pair, rep.pair_correct, rep.pair_flipped);
  if (ds.dimension() == 2) {
    rep.equator = EquatorDiagnostic{single_bz, pair_bz, expected_abs_bz(ds.config.law)};
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Latent geometry of cos(t/2)|+1> + e^{i p} sin(t/2)|-1>

struct CircleFit {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double radius = 0.0;
  double rms_residual = 0.0;  // RMS 3-D distance of points to the fitted circle
};

// Plane fit (smallest principal direction) followed by an algebraic
// least-squares circle fit in plane coordinates.
inline CircleFit fit_circle(const Eigen::MatrixXd& points) {
  require(points.cols() == 3 && points.rows() >= 3, ErrorCategory::invalid_argument,
          "circle fit needs at least three 3-D points");
  CircleFit fit;
  const Eigen::RowVector3d centroid = points.colwise().mean();
  const Eigen::MatrixXd c = points.rowwise() - centroid;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinV);
  const Eigen::Vector3d e1 = svd.matrixV().col(0);
  const Eigen::Vector3d e2 = svd.matrixV().col(1);
  fit.normal = svd.matrixV().col(2);

  const Eigen::Index n = points.rows();
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = c.row(i).dot(e1.transpose());
    const double v = c.row(i).dot(e2.transpose());
    a(i, 0) = u;
    a(i, 1) = v;
    a(i, 2) = 1.0;
    rhs[i] = u * u + v * v;
  }
  const Eigen::Vector3d sol = a.completeOrthogonalDecomposition().solve(rhs);
  const double cu = sol[0] / 2;
  const double cv = sol[1] / 2;
  fit.radius = std::sqrt(std::max(0.0, sol[2] + cu * cu + cv * cv));
  fit.center = centroid.transpose() + cu * e1 + cv * e2;

  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = points.row(i).transpose() - fit.center;
    const double h = p.dot(fit.normal);
    const double inplane = (p - h * fit.normal).norm();
    ss += h * h + (inplane - fit.radius) * (inplane - fit.radius);
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

struct ThetaSlice {
  double theta = 0.0;
  double radius = 0.0;
  double rms_residual = 0.0;
  double diameter = 0.0;  // largest pairwise distance in the slice
  Eigen::MatrixXd latents;  // n_phi x 3
};

struct GeometryReport {
  std::vector<ThetaSlice> slices;
  Eigen::VectorXd explained_variance_ratio;
};

inline GeometryReport latent_geometry(const std::vector<double>& thetas, int n_phi,
                                      const BeamGeometry& geom = {}) {
  require(!thetas.empty(), ErrorCategory::invalid_argument, "no theta values given");
  require(n_phi >= 3, ErrorCategory::invalid_argument, "n_phi must be >= 3");
  for (double t : thetas) {
    require(t >= 0 && t <= std::numbers::pi + 1e-12, ErrorCategory::invalid_argument,
            "theta values must lie in [0, pi]");
  }
  const ModeFields fields(ModeBasis({-1, 1}), geom);
  const int npix = geom.grid_n * geom.grid_n;
  const auto total = static_cast<Eigen::Index>(thetas.size()) * n_phi;
  Eigen::MatrixXd data(total, npix);
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (int k = 0; k < n_phi; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / n_phi;
      const IntensityImage img =
          fields.render(family_state(thetas[t], phi).coefficients(), Normalization::unit_sum);
      data.row(static_cast<Eigen::Index>(t) * n_phi + k) = image_vector(img).transpose();
    }
  }
  PcaOptions po;
  po.solver = PcaSolver::exact_svd;
  const PcaModel pca = pca_fit(data, std::min<int>(3, static_cast<int>(total) - 1), po);
  Eigen::MatrixXd latents = pca.transform_rows(data);
  if (latents.cols() < 3) {
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(latents.rows(), 3);
    padded.leftCols(latents.cols()) = latents;
    latents = padded;
  }

  GeometryReport rep;
  rep.explained_variance_ratio = pca.explained_variance_ratio;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    ThetaSlice s;
    s.theta = thetas[t];
    s.latents = latents.middleRows(static_cast<Eigen::Index>(t) * n_phi, n_phi);
    for (Eigen::Index i = 0; i < n_phi; ++i) {
      for (Eigen::Index j = i + 1; j < n_phi; ++j) {
        s.diameter = std::max(s.diameter, (s.latents.row(i) - s.latents.row(j)).norm());
      }
    }
    const double scale = latents.cwiseAbs().maxCoeff();
    if (s.diameter > 1e-9 * scale) {
      const CircleFit fit = fit_circle(s.latents);
      s.radius = fit.radius;
      s.rms_residual = fit.rms_residual;
    }
    rep.slices.push_back(std::move(s));
  }
  return rep;
}

}  // namespace oamreg
