#pragma once

// Qudit state algebra: generalized Gell-Mann (GGM) basis, Bloch vectors,
// nearest pure state, fidelity and random-state sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "oamreg/basis.hpp"
#include "oamreg/error.hpp"

namespace oamreg {

// Generators ordered as: symmetric off-diagonal (j<k, lexicographic),
// antisymmetric off-diagonal (same order), diagonal by increasing rank.
// Normalization tr(L_i L_j) = 2 delta_ij.
struct GGMBasis {
  int dimension = 0;
  std::vector<Eigen::MatrixXcd> matrices;
};

inline int bloch_length(int d) { return d * d - 1; }

inline GGMBasis ggm_basis(int d) {
  require(d >= 2 && d <= 16, ErrorCategory::invalid_argument,
          "GGM dimension must be in [2, 16], got " + std::to_string(d));
  GGMBasis g;
  g.dimension = d;
  g.matrices.reserve(static_cast<std::size_t>(bloch_length(d)));
  const Complex i1(0.0, 1.0);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
      m(j, k) = 1.0;
      m(k, j) = 1.0;
      g.matrices.push_back(std::move(m));
    }
  }
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
      m(j, k) = -i1;
      m(k, j) = i1;
      g.matrices.push_back(std::move(m));
    }
  }
  for (int l = 1; l < d; ++l) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    const double s = std::sqrt(2.0 / (l * (l + 1.0)));
    for (int i = 0; i < l; ++i) m(i, i) = s;
    m(l, l) = -l * s;
    g.matrices.push_back(std::move(m));
  }
  return g;
}

struct BlochVector {
  int dimension = 0;
  Eigen::VectorXd components;

  BlochVector() = default;
  BlochVector(int d, Eigen::VectorXd c) : dimension(d), components(std::move(c)) {
    require(d >= 2, ErrorCategory::invalid_argument, "Bloch dimension must be >= 2");
    require(components.size() == bloch_length(d), ErrorCategory::dimension_mismatch,
            "Bloch vector length must be d^2-1");
  }
};

struct DensityMatrix {
  Eigen::MatrixXcd entries;
  int dimension() const { return static_cast<int>(entries.rows()); }
};

namespace detail {

// Index of the symmetric generator for pair (j, k), j < k.
inline int pair_index(int j, int k, int d) { return j * d - j * (j + 1) / 2 + (k - j - 1); }

}  // namespace detail

// b_i = c^dagger L_i c, evaluated without forming the generators.
inline Eigen::VectorXd bloch_components(const Eigen::VectorXcd& c) {
  const int d = static_cast<int>(c.size());
  const int npair = d * (d - 1) / 2;
  Eigen::VectorXd b(bloch_length(d));
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      const Complex z = std::conj(c[j]) * c[k];
      const int p = detail::pair_index(j, k, d);
      b[p] = 2.0 * z.real();
      b[npair + p] = 2.0 * z.imag();
    }
  }
  double partial = 0.0;
  for (int l = 1; l < d; ++l) {
    partial += std::norm(c[l - 1]);
    b[2 * npair + l - 1] = std::sqrt(2.0 / (l * (l + 1.0))) * (partial - l * std::norm(c[l]));
  }
  return b;
}

inline BlochVector state_to_bloch(const PureState& state) {
  return BlochVector(state.dimension(), bloch_components(state.coefficients()));
}

// rho = I/d + (1/2) sum_i b_i L_i
inline DensityMatrix bloch_to_density(const BlochVector& b) {
  const int d = b.dimension;
  const int npair = d * (d - 1) / 2;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      const int p = detail::pair_index(j, k, d);
      const Complex v(0.5 * b.components[p], -0.5 * b.components[npair + p]);
      rho(j, k) = v;
      rho(k, j) = std::conj(v);
    }
  }
  for (int i = 0; i < d; ++i) rho(i, i) = 1.0 / d;
  for (int l = 1; l < d; ++l) {
    const double s = 0.5 * std::sqrt(2.0 / (l * (l + 1.0))) * b.components[2 * npair + l - 1];
    for (int i = 0; i < l; ++i) rho(i, i) += s;
    rho(l, l) -= l * s;
  }
  return DensityMatrix{std::move(rho)};
}

inline BlochVector density_to_bloch(const DensityMatrix& rho) {
  const int d = rho.dimension();
  require(d >= 2 && rho.entries.cols() == d, ErrorCategory::dimension_mismatch,
          "density matrix must be square with d >= 2");
  const double asym = (rho.entries - rho.entries.adjoint()).cwiseAbs().maxCoeff();
  require(asym <= 1e-8, ErrorCategory::invalid_argument, "density matrix is not Hermitian");
  const Eigen::MatrixXcd h = 0.5 * (rho.entries + rho.entries.adjoint());
  const int npair = d * (d - 1) / 2;
  Eigen::VectorXd b(bloch_length(d));
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      const int p = detail::pair_index(j, k, d);
      // tr(rho L) for L = E_jk + E_kj and L = -i E_jk + i E_kj.
      b[p] = 2.0 * h(k, j).real();
      b[npair + p] = 2.0 * h(j, k).imag() * -1.0;
    }
  }
  double partial = 0.0;
  for (int l = 1; l < d; ++l) {
    partial += h(l - 1, l - 1).real();
    b[2 * npair + l - 1] = std::sqrt(2.0 / (l * (l + 1.0))) * (partial - l * h(l, l).real());
  }
  return BlochVector(d, std::move(b));
}

// Canonical global phase: the largest-magnitude coefficient (first on ties)
// is made real and positive.
inline Eigen::VectorXcd canonical_phase(Eigen::VectorXcd c) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double a = std::abs(c[i]);
    if (a > best + 1e-14) {
      best = a;
      arg = i;
    }
  }
  if (best > 0) {
    c *= std::polar(1.0, -std::arg(c[arg]));
    c[arg] = std::abs(c[arg]);
  }
  return c;
}

struct NearestPure {
  PureState state;
  double top_eigenvalue = 0.0;
  double spectral_gap = 0.0;
  bool degenerate = false;
};

inline constexpr double kDegeneracyGap = 1e-12;

// Top eigenvector of the Hermitized reconstruction I/d + b.L/2.
inline NearestPure nearest_pure(const BlochVector& b, const ModeBasis& basis) {
  require(b.components.allFinite(), ErrorCategory::invalid_argument,
          "Bloch vector has non-finite entries");
  require(basis.size() == b.dimension, ErrorCategory::dimension_mismatch,
          "basis size does not match Bloch dimension");
  const DensityMatrix rho = bloch_to_density(b);
  const Eigen::MatrixXcd h = 0.5 * (rho.entries + rho.entries.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  require(eig.info() == Eigen::Success, ErrorCategory::numerical,
          "eigendecomposition failed in nearest_pure");
  const int d = b.dimension;
  const auto& w = eig.eigenvalues();
  NearestPure out;
  out.top_eigenvalue = w[d - 1];
  out.spectral_gap = w[d - 1] - w[d - 2];
  out.degenerate = out.spectral_gap < kDegeneracyGap;
  Eigen::VectorXcd v = eig.eigenvectors().col(d - 1);
  v.normalize();
  out.state = PureState::normalized(basis, canonical_phase(std::move(v)));
  return out;
}

inline double fidelity(const PureState& psi, const PureState& phi) {
  require(psi.basis() == phi.basis(), ErrorCategory::incompatible,
          "fidelity requires states on the same basis (" + psi.basis().to_string() + " vs " +
              phi.basis().to_string() + ")");
  const double f = std::norm(psi.coefficients().dot(phi.coefficients()));
  return std::clamp(f, 0.0, 1.0);
}

// Law used to draw random states. `haar` is the unitarily invariant measure;
// `uniform_box` draws real and imaginary parts iid from U[0, 1).
enum class SamplingLaw { haar, uniform_box };

inline std::string_view law_name(SamplingLaw law) {
  return law == SamplingLaw::haar ? "haar" : "box";
}

inline SamplingLaw parse_law(std::string_view s) {
  if (s == "haar") return SamplingLaw::haar;
  if (s == "box" || s == "uniform_box") return SamplingLaw::uniform_box;
  fail(ErrorCategory::invalid_argument, "unknown sampling law '" + std::string(s) + "'");
}

inline PureState random_state(const ModeBasis& basis, SamplingLaw law, std::mt19937_64& rng) {
  const int d = basis.size();
  Eigen::VectorXcd c(d);
  for (;;) {
    if (law == SamplingLaw::haar) {
      std::normal_distribution<double> g(0.0, 1.0);
      for (int i = 0; i < d; ++i) {
        const double re = g(rng);
        const double im = g(rng);
        c[i] = Complex(re, im);
      }
    } else {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int i = 0; i < d; ++i) {
        const double re = u(rng);
        const double im = u(rng);
        c[i] = Complex(re, im);
      }
    }
    if (c.norm() > 1e-300) break;
  }
  return PureState::normalized(basis, std::move(c));
}

inline PureState haar_random(const ModeBasis& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_state(basis, SamplingLaw::haar, rng);
}

inline PureState haar_random(int d, std::uint64_t seed) {
  require(d >= 2, ErrorCategory::invalid_argument, "dimension must be >= 2");
  return haar_random(ModeBasis::consecutive(d), seed);
}

// cos(theta/2)|+1> + e^{i phi} sin(theta/2)|-1> on the ordered basis (-1, +1).
inline PureState family_state(double theta, double phi) {
  require(theta >= 0 && theta <= std::numbers::pi + 1e-12, ErrorCategory::invalid_argument,
          "theta must lie in [0, pi]");
  require(std::isfinite(phi), ErrorCategory::invalid_argument, "phi must be finite");
  Eigen::VectorXcd c(2);
  c[0] = std::polar(std::sin(theta / 2), phi);
  c[1] = std::cos(theta / 2);
  return PureState::normalized(ModeBasis({-1, 1}), std::move(c));
}

}  // namespace oamreg
