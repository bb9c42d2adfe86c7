#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oamreg/statespace.hpp"

using namespace oamreg;

namespace {

const Complex I(0.0, 1.0);

// b_i = c^dagger L_i c with the explicit generator matrices.
Eigen::VectorXd bloch_by_matrices(const Eigen::VectorXcd& c) {
  const GGMBasis g = ggm_basis(static_cast<int>(c.size()));
  Eigen::VectorXd b(g.matrices.size());
  for (std::size_t i = 0; i < g.matrices.size(); ++i) {
    b[static_cast<Eigen::Index>(i)] = (c.adjoint() * g.matrices[i] * c)(0, 0).real();
  }
  return b;
}

Eigen::MatrixXcd random_hermitian_traceless(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
  }
  Eigen::MatrixXcd h = a + a.adjoint();
  h -= (h.trace() / static_cast<double>(d)) * Eigen::MatrixXcd::Identity(d, d);
  return h;
}

}  // namespace

TEST(GgmBasis, QubitIsPauli) {
  const GGMBasis g = ggm_basis(2);
  ASSERT_EQ(g.matrices.size(), 3u);
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, -I, I, 0;
  sz << 1, 0, 0, -1;
  EXPECT_EQ(g.matrices[0], Eigen::MatrixXcd(sx));
  EXPECT_EQ(g.matrices[1], Eigen::MatrixXcd(sy));
  EXPECT_EQ(g.matrices[2], Eigen::MatrixXcd(sz));
}

TEST(GgmBasis, OrthogonalHermitianTraceless) {
  for (int d = 2; d <= 8; ++d) {
    const GGMBasis g = ggm_basis(d);
    ASSERT_EQ(static_cast<int>(g.matrices.size()), d * d - 1);
    for (std::size_t i = 0; i < g.matrices.size(); ++i) {
      EXPECT_LT((g.matrices[i] - g.matrices[i].adjoint()).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LT(std::abs(g.matrices[i].trace()), 1e-14);
      for (std::size_t j = 0; j < g.matrices.size(); ++j) {
        const Complex t = (g.matrices[i] * g.matrices[j]).trace();
        EXPECT_LT(std::abs(t - (i == j ? 2.0 : 0.0)), 1e-12) << d << " " << i << " " << j;
      }
    }
  }
}

TEST(GgmBasis, DeclaredOrderingForQutrit) {
  const GGMBasis g = ggm_basis(3);
  // symmetric (0,1), (0,2), (1,2); antisymmetric same pairs; two diagonals
  EXPECT_EQ(g.matrices[1](0, 2), Complex(1.0));
  EXPECT_EQ(g.matrices[3](0, 1), -I);
  EXPECT_EQ(g.matrices[5](1, 2), -I);
  EXPECT_EQ(g.matrices[5](2, 1), I);
  EXPECT_NEAR(g.matrices[7](2, 2).real(), -2.0 / std::sqrt(3.0), 1e-15);
  EXPECT_THROW(ggm_basis(1), Error);
  EXPECT_THROW(ggm_basis(17), Error);
}

TEST(GgmBasis, CompletenessForHermitianTraceless) {
  std::mt19937_64 rng(4);
  for (int d = 2; d <= 6; ++d) {
    const GGMBasis g = ggm_basis(d);
    const Eigen::MatrixXcd h = random_hermitian_traceless(d, rng);
    Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& m : g.matrices) rebuilt += 0.5 * (h * m).trace().real() * m;
    EXPECT_LT((rebuilt - h).norm(), 1e-10);
  }
}

TEST(StateToBloch, BasisExamples) {
  const ModeBasis b(std::vector<int>{-1, 1});
  const BlochVector z = state_to_bloch(PureState::basis_state(b, -1));
  EXPECT_NEAR((z.components - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-15);
  Eigen::VectorXcd c(2);
  c << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  const BlochVector x = state_to_bloch(PureState(b, c));
  EXPECT_NEAR((x.components - Eigen::Vector3d(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(StateToBloch, MatchesExplicitGeneratorsAndPurity) {
  for (int d = 2; d <= 8; ++d) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const PureState psi = haar_random(d, 1000 * d + seed);
      const BlochVector b = state_to_bloch(psi);
      EXPECT_LT((b.components - bloch_by_matrices(psi.coefficients())).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(b.components.squaredNorm(), 2.0 * (1.0 - 1.0 / d), 1e-10);
      const PureState rotated(psi.basis(), psi.coefficients() * std::polar(1.0, 2.1));
      EXPECT_LT((state_to_bloch(rotated).components - b.components).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(BlochDensity, ProjectorAndRoundTrip) {
  const BlochVector zero(4, Eigen::VectorXd::Zero(15));
  EXPECT_LT((bloch_to_density(zero).entries - 0.25 * Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-15);

  const PureState psi = haar_random(4, 77);
  const Eigen::MatrixXcd rho = bloch_to_density(state_to_bloch(psi)).entries;
  const Eigen::MatrixXcd proj = psi.coefficients() * psi.coefficients().adjoint();
  EXPECT_LT((rho - proj).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((rho * psi.coefficients() - psi.coefficients()).norm(), 1e-10);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int d = 2; d <= 6; ++d) {
    Eigen::VectorXd v(d * d - 1);
    for (auto& x : v) x = n(rng);
    const BlochVector b(d, v);
    const DensityMatrix r = bloch_to_density(b);
    EXPECT_NEAR(r.entries.trace().real(), 1.0, 1e-12);
    EXPECT_LT((r.entries - r.entries.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((density_to_bloch(r).components - v).cwiseAbs().maxCoeff(), 1e-12);
    // oracle: tr(rho L_i) with explicit generators
    const GGMBasis g = ggm_basis(d);
    for (std::size_t i = 0; i < g.matrices.size(); ++i) {
      EXPECT_NEAR((r.entries * g.matrices[i]).trace().real(), v[static_cast<Eigen::Index>(i)], 1e-12);
    }
  }
}

TEST(BlochDensity, RejectsNonHermitian) {
  Eigen::MatrixXcd m = 0.5 * Eigen::MatrixXcd::Identity(2, 2);
  m(0, 1) = 0.3;
  EXPECT_THROW(density_to_bloch(DensityMatrix{m}), Error);
}

TEST(NearestPure, RecoversPureState) {
  for (int d = 2; d <= 8; ++d) {
    const PureState psi = haar_random(d, 31 + d);
    const NearestPure np = nearest_pure(state_to_bloch(psi), psi.basis());
    EXPECT_NEAR(fidelity(np.state, psi), 1.0, 1e-10);
    EXPECT_FALSE(np.degenerate);
    // phase convention: largest-magnitude entry real positive
    Eigen::Index arg;
    np.state.coefficients().cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(np.state.coefficients()[arg].real(), 0.0);
    EXPECT_EQ(np.state.coefficients()[arg].imag(), 0.0);
    // idempotence on the Bloch side
    EXPECT_LT((state_to_bloch(np.state).components - state_to_bloch(psi).components).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(NearestPure, MixtureOracle) {
  for (int d : {2, 4, 7}) {
    const PureState psi = haar_random(d, 900 + d);
    const Eigen::MatrixXcd rho = 0.9 * psi.coefficients() * psi.coefficients().adjoint() +
                                 0.1 / d * Eigen::MatrixXcd::Identity(d, d);
    // oracle: dense eigendecomposition of the mixture itself
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
    const PureState top = PureState::normalized(psi.basis(), eig.eigenvectors().col(d - 1));
    EXPECT_NEAR(fidelity(top, psi), 1.0, 1e-10);
    const NearestPure np = nearest_pure(density_to_bloch(DensityMatrix{rho}), psi.basis());
    EXPECT_NEAR(fidelity(np.state, psi), 1.0, 1e-10);
    EXPECT_NEAR(np.top_eigenvalue, 0.9 + 0.1 / d, 1e-12);
  }
}

TEST(NearestPure, MaximallyMixedIsDegenerate) {
  const ModeBasis b = ModeBasis::symmetric(4);
  const NearestPure np = nearest_pure(BlochVector(4, Eigen::VectorXd::Zero(15)), b);
  EXPECT_TRUE(np.degenerate);
  EXPECT_NEAR(np.state.coefficients().norm(), 1.0, 1e-12);
  const NearestPure again = nearest_pure(BlochVector(4, Eigen::VectorXd::Zero(15)), b);
  EXPECT_EQ(np.state.coefficients(), again.state.coefficients());
}

TEST(Fidelity, BasicIdentities) {
  const PureState psi = haar_random(5, 3);
  const PureState phi = haar_random(5, 4);
  EXPECT_NEAR(fidelity(psi, psi), 1.0, 1e-15);
  const ModeBasis b = ModeBasis::consecutive(5);
  EXPECT_EQ(fidelity(PureState::basis_state(b, 0), PureState::basis_state(b, 1)), 0.0);
  EXPECT_NEAR(fidelity(psi, PureState(b, psi.coefficients() * std::polar(1.0, -0.4))), 1.0, 1e-15);
  EXPECT_NEAR(fidelity(psi, phi), fidelity(phi, psi), 1e-15);
  // pure-state closed form F = 1/d + b_psi . b_phi / 2
  const double closed = 0.2 + 0.5 * state_to_bloch(psi).components.dot(state_to_bloch(phi).components);
  EXPECT_NEAR(fidelity(psi, phi), closed, 1e-10);
  EXPECT_THROW(fidelity(psi, haar_random(ModeBasis::symmetric(5), 1)), Error);
}

TEST(HaarRandom, NormalizedAndDeterministic) {
  const PureState a = haar_random(6, 42);
  EXPECT_NEAR(a.coefficients().norm(), 1.0, 1e-12);
  EXPECT_EQ(a.coefficients(), haar_random(6, 42).coefficients());
  EXPECT_NE(a.coefficients(), haar_random(6, 43).coefficients());
}

TEST(HaarRandom, SecondMomentIsUniform) {
  const int d = 4, n = 100000;
  std::mt19937_64 rng(2024);
  const ModeBasis b = ModeBasis::consecutive(d);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p = random_state(b, SamplingLaw::haar, rng).coefficients().cwiseAbs2();
    sum += p;
    sq += p.cwiseAbs2();
  }
  for (int k = 0; k < d; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sq[k] / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - 1.0 / d), 3 * se) << k;
  }
}

TEST(BoxLaw, QubitEquatorMoment) {
  // E|b_z| under the box law by direct quadrature over the four uniforms:
  // b_z = (u1^2+u2^2 - u3^2-u4^2) / (u1^2+u2^2+u3^2+u4^2).
  const int m = 24;
  double acc = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int e = 0; e < m; ++e) {
          const double u1 = (a + 0.5) / m, u2 = (b + 0.5) / m, u3 = (c + 0.5) / m, u4 = (e + 0.5) / m;
          const double p = u1 * u1 + u2 * u2, q = u3 * u3 + u4 * u4;
          acc += std::abs(p - q) / (p + q);
        }
  acc /= std::pow(m, 4);
  std::mt19937_64 rng(5);
  const ModeBasis b(std::vector<int>{-1, 1});
  double mc = 0.0;
  for (int i = 0; i < 200000; ++i) mc += std::abs(state_to_bloch(random_state(b, SamplingLaw::uniform_box, rng)).components[2]);
  EXPECT_NEAR(mc / 200000, acc, 0.005);
}

TEST(FamilyState, Endpoints) {
  const ModeBasis b(std::vector<int>{-1, 1});
  EXPECT_NEAR(fidelity(family_state(0.0, 1.2), PureState::basis_state(b, 1)), 1.0, 1e-15);
  const PureState south = family_state(std::numbers::pi, 0.8);
  EXPECT_NEAR(std::abs(south.coefficients()[0] - std::polar(1.0, 0.8)), 0.0, 1e-15);
  const PureState eq = family_state(std::numbers::pi / 2, 0.0);
  EXPECT_NEAR(eq.coefficients()[0].real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(eq.coefficients()[1].real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(family_state(-0.1, 0.0), Error);
}
