#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oamreg/analysis.hpp"
#include "oamreg/pipeline.hpp"

using namespace oamreg;

namespace {

DatasetConfig small_config(const ModeBasis& basis, int n, std::uint64_t seed) {
  DatasetConfig c;
  c.basis = basis;
  c.n_samples = n;
  c.seed = seed;
  return c;
}

const Dataset& qubit_data() {
  static const Dataset ds = generate_dataset(small_config(ModeBasis::symmetric(2), 3000, 5));
  return ds;
}

const Dataset& ququart_data() {
  static const Dataset ds = generate_dataset(small_config(ModeBasis(std::vector<int>{-3, -1, 1, 3}), 3000, 6));
  return ds;
}

FitOptions total_budget(int total, ImageMode mode) {
  FitOptions o;
  o.mode = mode;
  o.budget = LatentBudget::from_total(total, mode);
  return o;
}

}  // namespace

TEST(GenerateDataset, PaperSizedSplit) {
  const Dataset ds = generate_dataset(small_config(ModeBasis(std::vector<int>{-3, -1, 1, 3}), 10000, 7));
  EXPECT_EQ(ds.size(), 10000);
  EXPECT_EQ(ds.train.size(), 8000u);
  EXPECT_EQ(ds.test.size(), 2000u);
  std::vector<int> all(ds.train);
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(all[static_cast<std::size_t>(i)], i);
  EXPECT_TRUE(ds.has_pair());
  EXPECT_EQ(ds.primary.cols(), 64 * 64);
}

TEST(GenerateDataset, DeterministicAndMatchesDirectRender) {
  const DatasetConfig c = small_config(ModeBasis::symmetric(3), 40, 11);
  const Dataset a = generate_dataset(c);
  const Dataset b = generate_dataset(c);
  EXPECT_EQ(a.primary, b.primary);
  EXPECT_EQ(*a.shifted, *b.shifted);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.train, b.train);
  for (int i = 0; i < a.size(); ++i) {
    const ImagePair p = render_pair(a.states[static_cast<std::size_t>(i)], c.geometry);
    for (int k = 0; k < a.primary.cols(); ++k) {
      ASSERT_EQ(a.primary(i, k), static_cast<float>(p.primary.pixels[static_cast<std::size_t>(k)]));
      ASSERT_EQ((*a.shifted)(i, k), static_cast<float>(p.shifted.pixels[static_cast<std::size_t>(k)]));
    }
    EXPECT_LT((a.targets.row(i).transpose() - state_to_bloch(a.states[static_cast<std::size_t>(i)]).components)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
  }
  DatasetConfig other = c;
  other.seed = 12;
  EXPECT_NE(generate_dataset(other).targets, a.targets);
}

TEST(GenerateDataset, RejectsTinyAndInvalidConfigs) {
  DatasetConfig c = small_config(ModeBasis::symmetric(2), 5, 1);
  EXPECT_THROW(generate_dataset(c), Error);
  c.n_samples = 20;
  c.train_fraction = 1.0;
  EXPECT_THROW(generate_dataset(c), Error);
  c.train_fraction = 0.8;
  c.noise = NoiseSpec{};
  EXPECT_THROW(generate_dataset(c), Error);
}

TEST(GenerateDataset, NoiseIsSeededAndKeepsImagesValid) {
  DatasetConfig c = small_config(ModeBasis::symmetric(2), 30, 3);
  c.noise = NoiseSpec{0.05, 20000.0, 0.5};
  const Dataset a = generate_dataset(c);
  const Dataset b = generate_dataset(c);
  EXPECT_EQ(a.primary, b.primary);
  const Dataset clean = generate_dataset(small_config(ModeBasis::symmetric(2), 30, 3));
  EXPECT_NE(a.primary, clean.primary);
  EXPECT_EQ(a.targets, clean.targets);  // noise never touches the states
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_GE(a.primary.row(i).minCoeff(), 0.0f);
    EXPECT_NEAR(a.primary.row(i).cast<double>().sum(), 1.0, 1e-5);
  }
}

TEST(FitPipeline, PairModeReachesUnitFidelityAtFifteenDims) {
  const Dataset& ds = ququart_data();
  const PipelineModel m = fit_pipeline(ds, total_budget(15, ImageMode::pair));
  EXPECT_EQ(m.budget.primary, 8);
  EXPECT_EQ(m.budget.shifted, 7);
  EXPECT_EQ(m.latent_dim(), 15);
  EXPECT_GE(evaluate(m, ds).mean, 0.99);
}

TEST(FitPipeline, SingleModePlateausForQubit) {
  const Dataset& ds = qubit_data();
  const FidelityStats s = evaluate(fit_pipeline(ds, total_budget(10, ImageMode::single)), ds);
  EXPECT_LT(s.mean, 0.95);
  EXPECT_GT(s.mean, 0.85);
}

TEST(FitPipeline, EtrAndJointPcaVariantsRun) {
  const Dataset& ds = ququart_data();
  FitOptions o = total_budget(15, ImageMode::pair);
  o.regressor = RegressorKind::etr;
  o.etr.n_trees = 10;
  const PipelineModel etr = fit_pipeline(ds, o);
  EXPECT_EQ(etr.etr.trees.size(), 10u);
  EXPECT_GT(evaluate(etr, ds).mean, 0.5);
  FitOptions joint = total_budget(15, ImageMode::pair);
  joint.concatenated_pca = true;
  const PipelineModel j = fit_pipeline(ds, joint);
  EXPECT_TRUE(j.concatenated);
  EXPECT_EQ(j.latent_dim(), 15);
  EXPECT_GE(evaluate(j, ds).mean, 0.95);
  EXPECT_EQ(predict_state(j, ds.pair(ds.test[0])).state.coefficients(),
            predict_rows(j, dataset_latents(j, ds, {ds.test[0]}))[0].state.coefficients());
}

TEST(FitPipeline, RejectsInfeasibleBudgets) {
  const Dataset& ds = qubit_data();
  FitOptions o;
  o.budget = {1, 0};
  EXPECT_THROW(fit_pipeline(ds, o), Error);  // pair mode needs a shifted latent
  o.budget = {5000, 5000};
  EXPECT_THROW(fit_pipeline(ds, o), Error);
  Dataset single = generate_dataset([] {
    DatasetConfig c = small_config(ModeBasis::symmetric(2), 50, 1);
    c.image_mode = ImageMode::single;
    return c;
  }());
  EXPECT_THROW(fit_pipeline(single, total_budget(4, ImageMode::pair)), Error);
}

TEST(PredictState, HeldOutSampleAndContracts) {
  const Dataset& ds = ququart_data();
  const PipelineModel m = fit_pipeline(ds, total_budget(15, ImageMode::pair));
  const int i = ds.test[3];
  const Prediction p = predict_state(m, ds.pair(i));
  EXPECT_GT(fidelity(p.state, ds.states[static_cast<std::size_t>(i)]), 0.99);
  EXPECT_EQ(p.raw.components.size(), 15);
  const Prediction again = predict_state(m, ds.pair(i));
  EXPECT_EQ(p.state.coefficients(), again.state.coefficients());

  const IntensityImage zero(64, 64, std::vector<double>(64 * 64, 0.0), Normalization::raw);
  const Prediction z = predict_state(m, ImagePair(zero, zero));
  EXPECT_NEAR(z.state.coefficients().norm(), 1.0, 1e-12);
  EXPECT_LT((z.raw.components - (m.linear.intercept - m.linear.weights * [&] {
                                   Eigen::VectorXd lat(15);
                                   lat << m.pca_primary.components * m.pca_primary.mean,
                                       m.pca_shifted->components * m.pca_shifted->mean;
                                   return lat;
                                 }()))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);

  const IntensityImage small(32, 32, std::vector<double>(32 * 32, 1.0 / 1024), Normalization::unit_sum);
  EXPECT_THROW(predict_state(m, ImagePair(small, small)), Error);
  EXPECT_THROW(predict_state(m, ds.image(i)), Error);
}

TEST(Evaluate, FlippedNeedsSymmetricBasisAndTargets) {
  const Dataset ds = generate_dataset(small_config(ModeBasis::consecutive(2, 0), 200, 2));
  const PipelineModel m = fit_pipeline(ds, total_budget(4, ImageMode::pair));
  EXPECT_NO_THROW(evaluate(m, ds, Against::correct));
  EXPECT_THROW(evaluate(m, ds, Against::flipped), Error);
  Dataset blind = ds;
  blind.states.clear();
  EXPECT_THROW(evaluate(m, blind), Error);
  EXPECT_THROW(evaluate(m, qubit_data()), Error);  // basis mismatch
}

TEST(Evaluate, StatsAreConsistent) {
  const Dataset& ds = qubit_data();
  const FidelityStats s = evaluate(fit_pipeline(ds, total_budget(3, ImageMode::pair)), ds);
  ASSERT_EQ(s.n(), ds.test.size());
  double sum = 0.0;
  for (double f : s.fidelities) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    sum += f;
  }
  EXPECT_NEAR(s.mean, sum / s.n(), 1e-12);
}

TEST(Sweep, NestedTruncationMatchesDirectFit) {
  const Dataset& ds = ququart_data();
  const auto rows = sweep_latent_dims(ds, {5, 9, 15}, {RegressorKind::linear}, {ImageMode::pair, ImageMode::single});
  ASSERT_EQ(rows.size(), 6u);
  for (const SweepRow& r : rows) {
    const FidelityStats direct = evaluate(fit_pipeline(ds, total_budget(r.total_dims, r.mode)), ds);
    EXPECT_NEAR(r.mean_fidelity, direct.mean, 1e-6) << r.total_dims << " " << mode_name(r.mode);
    EXPECT_EQ(r.n_test, static_cast<long long>(ds.test.size()));
  }
  EXPECT_THROW(sweep_latent_dims(ds, {5, 3}, {RegressorKind::linear}, {ImageMode::pair}), Error);
}

TEST(Sweep, PairModeDominatesAndIsMonotone) {
  for (int d : {2, 3, 4}) {
    const Dataset ds = generate_dataset(small_config(ModeBasis::symmetric(d), 3000, 40 + d));
    const int top = d * d - 1;
    std::vector<int> dims;
    for (int t = 2; t <= top; ++t) dims.push_back(t);
    const auto rows = sweep_latent_dims(ds, dims, {RegressorKind::linear}, {ImageMode::pair, ImageMode::single});
    const SweepRow* prev = nullptr;
    double pair_top = 0, single_top = 0;
    for (const SweepRow& r : rows) {
      if (r.mode == ImageMode::pair) {
        if (prev) {
          const double se = std::hypot(r.stderr_mean, prev->stderr_mean);
          EXPECT_GE(r.mean_fidelity, prev->mean_fidelity - se) << d << " " << r.total_dims;
        }
        prev = &r;
      }
      if (r.total_dims == top) (r.mode == ImageMode::pair ? pair_top : single_top) = r.mean_fidelity;
    }
    EXPECT_GT(pair_top - single_top, 0.05) << d;
  }
}

TEST(Symmetry, QubitEquatorCollapse) {
  const SymmetryReport rep = symmetry_analysis(qubit_data(), 3, RegressorKind::linear);
  ASSERT_TRUE(rep.equator.has_value());
  EXPECT_LT(rep.equator->single_mean_abs_bz, 0.2);
  EXPECT_NEAR(rep.equator->pair_mean_abs_bz, rep.equator->law_mean_abs_bz, 0.1);
  EXPECT_GT(rep.pair_correct.mean - rep.pair_flipped.mean, 0.2);
  const double se = std::hypot(rep.single_correct.stderr_mean, rep.single_flipped.stderr_mean);
  EXPECT_LT(std::abs(rep.single_correct.mean - rep.single_flipped.mean), 3 * se);
}

TEST(Symmetry, LawExpectationOfAbsBz) {
  // Haar: |b_z| is uniform on [0, 1] for a qubit, so E|b_z| = 1/2.
  EXPECT_NEAR(expected_abs_bz(SamplingLaw::haar), 0.5, 0.005);
}

TEST(CircleFit, RecoversTiltedCircle) {
  const Eigen::Vector3d centre(0.3, -1.0, 2.0);
  const Eigen::Vector3d u = Eigen::Vector3d(1, 1, 0).normalized();
  const Eigen::Vector3d v = Eigen::Vector3d(-1, 1, 1).normalized().cross(u).normalized();
  Eigen::MatrixXd pts(40, 3);
  for (int k = 0; k < 40; ++k) {
    const double a = 2 * std::numbers::pi * k / 40;
    pts.row(k) = (centre + 0.7 * (std::cos(a) * u + std::sin(a) * v)).transpose();
  }
  const CircleFit fit = fit_circle(pts);
  EXPECT_NEAR(fit.radius, 0.7, 1e-10);
  EXPECT_LT(fit.rms_residual, 1e-10);
  EXPECT_LT((fit.center - centre).norm(), 1e-10);
}

TEST(LatentGeometry, CirclesGrowTowardEquator) {
  const double pi = std::numbers::pi;
  const GeometryReport rep = latent_geometry({pi / 2, 3 * pi / 4, 7 * pi / 8, pi}, 64, BeamGeometry{});
  ASSERT_EQ(rep.slices.size(), 4u);
  const auto& s = rep.slices;
  EXPECT_GT(s[0].radius, s[1].radius);
  EXPECT_GT(s[1].radius, s[2].radius);
  EXPECT_GT(s[2].radius, s[3].diameter);
  EXPECT_LT(s[3].diameter, 0.05 * s[0].radius);
  EXPECT_LT(s[0].rms_residual, 0.05 * s[0].radius);
  // the phase-dependent image term scales with sin(theta)
  EXPECT_NEAR(s[1].radius / s[0].radius, std::sin(3 * pi / 4), 1e-6);
}
