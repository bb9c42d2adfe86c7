#pragma once

// Principal component analysis. Reference semantics are the thin SVD of the
// centred data; large problems use block subspace iteration with a
// Rayleigh-Ritz step, converged until the eigen-residuals are at rounding
// level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "oamreg/error.hpp"

namespace oamreg {

enum class PcaSolver { automatic, exact_svd, subspace };

struct PcaOptions {
  PcaSolver solver = PcaSolver::automatic;
  bool whiten = false;
  int oversample = 12;
  int max_iterations = 400;
  double residual_tolerance = 1e-13;  // relative to the top eigenvalue
  std::uint64_t seed = 0x70ca5eedULL;
};

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // n x m, orthonormal rows
  Eigen::VectorXd singular_values;
  Eigen::VectorXd explained_variance_ratio;
  double total_variance = 0.0;  // squared Frobenius norm of the centred data
  long long n_samples = 0;
  bool whiten = false;

  int input_dim() const { return static_cast<int>(mean.size()); }
  int n_components() const { return static_cast<int>(components.rows()); }

  // Keeps the leading n components. Valid because the components are nested.
  PcaModel truncated(int n) const {
    require(n >= 0 && n <= n_components(), ErrorCategory::invalid_argument,
            "cannot truncate PCA to " + std::to_string(n) + " components");
    PcaModel out = *this;
    out.components = components.topRows(n);
    out.singular_values = singular_values.head(n);
    out.explained_variance_ratio = explained_variance_ratio.head(n);
    return out;
  }

  Eigen::VectorXd latent_scale() const {
    Eigen::VectorXd s = Eigen::VectorXd::Ones(n_components());
    if (whiten && n_samples > 1) {
      for (int i = 0; i < n_components(); ++i) {
        const double sd = singular_values[i] / std::sqrt(static_cast<double>(n_samples - 1));
        s[i] = sd > 0 ? sd : 1.0;
      }
    }
    return s;
  }

  Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    require(x.size() == input_dim(), ErrorCategory::dimension_mismatch,
            "PCA input has " + std::to_string(x.size()) + " entries, expected " +
                std::to_string(input_dim()));
    Eigen::VectorXd y = components * (x - mean);
    if (whiten) y.array() /= latent_scale().array();
    return y;
  }

  // Rows of `data` are samples.
  Eigen::MatrixXd transform_rows(const Eigen::Ref<const Eigen::MatrixXd>& data) const {
    require(data.cols() == input_dim(), ErrorCategory::dimension_mismatch,
            "PCA input width does not match the model");
    Eigen::MatrixXd y = (data.rowwise() - mean.transpose()) * components.transpose();
    if (whiten) y.array().rowwise() /= latent_scale().transpose().array();
    return y;
  }

  Eigen::VectorXd inverse(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    require(y.size() == n_components(), ErrorCategory::dimension_mismatch,
            "latent vector length does not match the number of components");
    Eigen::VectorXd scaled = y;
    if (whiten) scaled.array() *= latent_scale().array();
    return mean + components.transpose() * scaled;
  }
};

namespace detail {

// Each row is flipped so that its largest-magnitude entry is positive.
inline void fix_component_signs(Eigen::MatrixXd& components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
      const double a = std::abs(components(r, c));
      if (a > best) {
        best = a;
        arg = c;
      }
    }
    if (components(r, arg) < 0) components.row(r) *= -1.0;
  }
}

inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

struct Spectrum {
  Eigen::MatrixXd vectors;  // m x n, columns
  Eigen::VectorXd singular_values;
};

inline Spectrum exact_spectrum(const Eigen::MatrixXd& centred, int n) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  return {svd.matrixV().leftCols(n), svd.singularValues().head(n)};
}

inline Spectrum subspace_spectrum(const Eigen::MatrixXd& centred, int n, const PcaOptions& opt) {
  const Eigen::Index m = centred.cols();
  const Eigen::Index rank_cap = std::min(centred.rows(), m);
  const Eigen::Index k = std::min<Eigen::Index>(rank_cap, n + std::max(opt.oversample, n / 2));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd start(m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) start(i, j) = g(rng);
  }
  Eigen::MatrixXd q = orthonormalize(centred.transpose() * (centred * start));

  Spectrum out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::MatrixXd b = centred * q;  // s x k
    Eigen::JacobiSVD<Eigen::MatrixXd> small(b, Eigen::ComputeThinV);
    const Eigen::MatrixXd& w = small.matrixV();
    const Eigen::VectorXd& sv = small.singularValues();
    const Eigen::MatrixXd z = centred.transpose() * b;  // X^T X Q
    const Eigen::MatrixXd ritz = q * w;

    out.vectors = ritz.leftCols(n);
    out.singular_values = sv.head(n);

    const double top = sv[0] * sv[0];
    bool converged = top == 0.0;
    if (!converged) {
      const Eigen::MatrixXd residual =
          (z * w).leftCols(n) - ritz.leftCols(n) * sv.head(n).cwiseAbs2().asDiagonal();
      converged = residual.colwise().norm().maxCoeff() <= opt.residual_tolerance * top;
    }
    if (converged) break;
    q = orthonormalize(z);
  }
  return out;
}

}  // namespace detail

// Rows of `data` are samples.
inline PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& data, int n_components,
                        const PcaOptions& options = {}) {
  const Eigen::Index s = data.rows();
  const Eigen::Index m = data.cols();
  require(s >= 2, ErrorCategory::invalid_argument, "PCA needs at least two samples");
  require(m >= 1, ErrorCategory::invalid_argument, "PCA needs at least one feature");
  require(n_components >= 1, ErrorCategory::invalid_argument, "n_components must be >= 1");
  require(n_components <= std::min<Eigen::Index>(s - 1, m), ErrorCategory::invalid_argument,
          "n_components=" + std::to_string(n_components) + " exceeds min(samples-1, features)=" +
              std::to_string(std::min<Eigen::Index>(s - 1, m)));

  PcaModel model;
  model.n_samples = s;
  model.whiten = options.whiten;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.rowwise() - model.mean.transpose();
  model.total_variance = centred.squaredNorm();

  PcaSolver solver = options.solver;
  if (solver == PcaSolver::automatic) {
    const Eigen::Index small = std::min(s, m);
    solver = (small <= 600 || 4 * n_components > small) ? PcaSolver::exact_svd
                                                         : PcaSolver::subspace;
  }
  const detail::Spectrum spectrum = solver == PcaSolver::exact_svd
                                        ? detail::exact_spectrum(centred, n_components)
                                        : detail::subspace_spectrum(centred, n_components, options);

  model.components = spectrum.vectors.transpose();
  detail::fix_component_signs(model.components);
  model.singular_values = spectrum.singular_values;
  model.explained_variance_ratio =
      model.total_variance > 0
          ? Eigen::VectorXd(spectrum.singular_values.cwiseAbs2() / model.total_variance)
          : Eigen::VectorXd::Zero(n_components);
  return model;
}

// Mean squared reconstruction error per sample.
inline double reconstruction_error(const PcaModel& model,
                                   const Eigen::Ref<const Eigen::MatrixXd>& data) {
  const Eigen::MatrixXd centred = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd proj = centred * model.components.transpose() * model.components;
  return (centred - proj).squaredNorm() / static_cast<double>(data.rows());
}

}  // namespace oamreg
