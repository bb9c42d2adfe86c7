// Simulate a qutrit dataset, train the two-image pipeline and reconstruct one
// held-out state from its pair of intensity images.

#include <cstdio>

#include "oamreg.hpp"

int main() {
  using namespace oamreg;

  DatasetConfig config;
  config.basis = ModeBasis::symmetric(3);  // l = -1, 0, +1
  config.n_samples = 2000;
  config.seed = 1;
  const Dataset ds = generate_dataset(config);
  std::printf("dataset: %d samples, %zu train / %zu test, %dx%d pixels\n", ds.size(), ds.train.size(),
              ds.test.size(), config.geometry.grid_n, config.geometry.grid_n);

  FitOptions options;
  options.budget = LatentBudget::from_total(8, ImageMode::pair);  // d^2 - 1 latents
  const PipelineModel model = fit_pipeline(ds, options);

  const FidelityStats stats = evaluate(model, ds);
  std::printf("test fidelity: %.4f +- %.4f over %zu states\n", stats.mean, stats.stderr_mean, stats.n());

  const int i = ds.test.front();
  const PureState& truth = ds.states[static_cast<std::size_t>(i)];
  const Prediction p = predict_state(model, ds.pair(i));
  std::printf("sample %d, fidelity %.6f\n", i, fidelity(p.state, truth));
  const Eigen::VectorXcd aligned = canonical_phase(truth.coefficients());  // same global phase as the output
  for (int k = 0; k < truth.dimension(); ++k) {
    const Complex t = aligned[k];
    const Complex r = p.state.coefficients()[k];
    std::printf("  l=%+d  true %+.4f%+.4fi  reconstructed %+.4f%+.4fi\n", truth.basis()[k], t.real(), t.imag(),
                r.real(), r.imag());
  }
  return 0;
}
