// oamreg: generate datasets, train and evaluate OAM state regressors, run
// latent sweeps and the symmetry / latent-geometry analyses.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oamreg.hpp"

namespace fs = std::filesystem;
using namespace oamreg;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
};

struct GeometryFlags {
  int grid = 64;
  double waist = 1.0;
  double wavenumber = 1.0;
  double plane_z = 0.0;
  std::optional<double> halfwidth;
  int supersample = 1;

  void add(CLI::App* app) {
    app->add_option("--grid", grid, "Pixels per image side")->capture_default_str();
    app->add_option("--waist", waist, "Beam waist w0")->capture_default_str();
    app->add_option("--wavenumber", wavenumber, "Wavenumber k")->capture_default_str();
    app->add_option("--plane-z", plane_z, "Observation plane z")->capture_default_str();
    app->add_option("--halfwidth", halfwidth, "Half-extent of the sampling window (default 4 w0)");
    app->add_option("--supersample", supersample, "Sub-samples per pixel side")->capture_default_str();
  }

  BeamGeometry build() const {
    BeamGeometry g;
    g.grid_n = grid;
    g.waist = waist;
    g.wavenumber = wavenumber;
    g.plane_z = plane_z;
    g.grid_halfwidth = halfwidth;
    g.supersample = supersample;
    g.validate();
    return g;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + path.string());
  return out;
}

std::string option_value(const CLI::Option* opt) {
  if (opt->count() == 0) {
    std::string d = opt->get_default_str();
    if (d.size() >= 2 && d.front() == '[' && d.back() == ']') d = d.substr(1, d.size() - 2);
    return d;
  }
  std::string v;
  for (const auto& r : opt->results()) v += (v.empty() ? "" : ",") + r;
  return v;
}

void put_options(std::ostream& out, const CLI::App& app) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "version" || name == "out") continue;
    const std::string v = option_value(opt);
    if (!v.empty()) out << name << " = " << v << "\n";
  }
}

// Every output directory carries the resolved configuration of the run, in
// the same INI layout --config accepts. The output path itself is left out
// so identical runs produce identical bytes wherever they are written.
void write_resolved_config(const CLI::App& app, const fs::path& dir) {
  ensure_directory(dir);
  auto out = open_out(dir / "config.ini");
  out << "# oamreg " << kVersion << " resolved configuration\n";
  put_options(out, app);
  for (const CLI::App* sub : app.get_subcommands()) {
    out << "\n[" << sub->get_name() << "]\n";
    put_options(out, *sub);
  }
}

fs::path require_out(const Globals& g) {
  require(!g.out.empty(), ErrorCategory::invalid_argument, "--out is required");
  return fs::path(g.out);
}

ModeBasis resolve_basis(const std::optional<int>& dim, const std::string& basis_text) {
  ModeBasis basis;
  if (!basis_text.empty()) {
    basis = ModeBasis::parse(basis_text);
    require(!dim || *dim == basis.size(), ErrorCategory::invalid_argument,
            "--dim " + std::to_string(*dim) + " disagrees with --basis " + basis.to_string());
  } else {
    require(dim.has_value(), ErrorCategory::invalid_argument, "give --dim or --basis");
    require(*dim >= 2 && *dim <= 16, ErrorCategory::invalid_argument, "--dim must lie in 2..16");
    basis = ModeBasis::symmetric(*dim);
  }
  return basis;
}

const char* kCsvHeader = "total_dims,mode,regressor,mean_fidelity,stderr,n_test";

void write_sweep_row(std::ostream& out, int total, ImageMode mode, RegressorKind reg,
                     const FidelityStats& s) {
  out << total << ',' << mode_name(mode) << ',' << regressor_name(reg) << ',' << fmt(s.mean) << ','
      << fmt(s.stderr_mean) << ',' << s.n();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct OAM superposition states from intensity images"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Configuration file (INI, one section per subcommand)");
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory");

  // gen -------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Simulate a dataset of random states and their images");
  std::optional<int> gen_dim;
  std::string gen_basis;
  int gen_samples = 10000;
  std::string gen_mode = "pair";
  std::string gen_law = "box";
  double gen_train = 0.8;
  int gen_shift = 1;
  double noise_sigma = 0.0;
  std::optional<double> noise_poisson;
  double noise_jitter = 0.0;
  GeometryFlags gen_geom;
  gen->add_option("--dim", gen_dim, "Hilbert-space dimension (symmetric basis)");
  gen->add_option("--basis", gen_basis, "Comma-separated azimuthal indices, e.g. -3,-1,1,3");
  gen->add_option("--samples", gen_samples, "Number of states")->capture_default_str();
  gen->add_option("--mode", gen_mode, "single or pair")->capture_default_str();
  gen->add_option("--law", gen_law, "State sampling law: box or haar")->capture_default_str();
  gen->add_option("--train-fraction", gen_train, "Training share")->capture_default_str();
  gen->add_option("--shift", gen_shift, "OAM shift of the second channel")->capture_default_str();
  gen->add_option("--noise-sigma", noise_sigma, "Gaussian noise relative to image max")->capture_default_str();
  gen->add_option("--noise-poisson", noise_poisson, "Expected photon counts per image");
  gen->add_option("--noise-jitter", noise_jitter, "Centre jitter std in pixels")->capture_default_str();
  gen_geom.add(gen);

  // train -----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Fit PCA compressors and a regressor");
  std::string train_data;
  std::optional<int> per_channel;
  std::optional<int> latent_total;
  std::optional<std::string> train_mode;
  std::string train_reg = "linear";
  double ridge = 0.0;
  EtrOptions etr;
  bool concat = false;
  bool whiten = false;
  train->add_option("--data", train_data, "Dataset directory")->required();
  auto* pc = train->add_option("--latent-per-channel", per_channel, "PCA components per channel");
  train->add_option("--latent-total", latent_total, "Total PCA components (pair: ceil/floor split)")
      ->excludes(pc);
  train->add_option("--mode", train_mode, "single or pair (default: dataset mode)");
  train->add_option("--regressor", train_reg, "linear or etr")->capture_default_str();
  train->add_option("--ridge", ridge, "Ridge penalty (0 = least squares)")->capture_default_str();
  train->add_option("--etr-trees", etr.n_trees, "Trees in the ensemble")->capture_default_str();
  train->add_option("--etr-min-split", etr.min_samples_split, "Minimum samples to split")->capture_default_str();
  train->add_option("--etr-max-depth", etr.max_depth, "Depth cap (0 = none)")->capture_default_str();
  train->add_option("--etr-candidates", etr.n_candidate_features, "Features drawn per split (0 = ceil sqrt n)")
      ->capture_default_str();
  train->add_flag("--concat-pca", concat, "One PCA over both channels instead of two");
  train->add_flag("--whiten", whiten, "Scale latents to unit variance");

  // eval ------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Score a model on a dataset's test split");
  std::string eval_model, eval_data, eval_against = "correct";
  eval->add_option("--model", eval_model, "Model directory")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--against", eval_against, "correct or flipped")->capture_default_str();

  // sweep -----------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Fidelity versus total latent dimensions");
  std::string sweep_data;
  std::vector<int> sweep_dims;
  std::vector<std::string> sweep_modes{"pair"};
  std::vector<std::string> sweep_regs{"linear"};
  EtrOptions sweep_etr;
  sweep->add_option("--data", sweep_data, "Dataset directory")->required();
  sweep->add_option("--dims", sweep_dims, "Ascending total latent dimensions")->required()->delimiter(',');
  sweep->add_option("--modes", sweep_modes, "Image modes")->delimiter(',')->capture_default_str();
  sweep->add_option("--regressors", sweep_regs, "Regressors")->delimiter(',')->capture_default_str();
  sweep->add_option("--etr-trees", sweep_etr.n_trees, "Trees in the ensemble")->capture_default_str();
  sweep->add_option("--etr-min-split", sweep_etr.min_samples_split, "Minimum samples to split")
      ->capture_default_str();

  // symmetry --------------------------------------------------------------
  auto* sym = app.add_subcommand("symmetry", "Correct versus flipped fidelity, single versus pair");
  std::string sym_data, sym_reg = "linear";
  std::optional<int> sym_dims;
  sym->add_option("--data", sym_data, "Pair-mode dataset directory")->required();
  sym->add_option("--dims", sym_dims, "Total latent dimensions (default d^2-1)");
  sym->add_option("--regressor", sym_reg, "linear or etr")->capture_default_str();

  // geometry --------------------------------------------------------------
  auto* geo = app.add_subcommand("geometry", "Latent-space circles of the one-qubit family");
  std::vector<double> thetas{std::numbers::pi / 2, 3 * std::numbers::pi / 4,
                             7 * std::numbers::pi / 8, std::numbers::pi};
  int n_phi = 64;
  GeometryFlags geo_geom;
  std::string theta_default;
  for (double t : thetas) theta_default += (theta_default.empty() ? "" : ",") + format_double(t);
  geo->add_option("--thetas", thetas, "Polar angles in radians")->delimiter(',')->default_str(theta_default);
  geo->add_option("--phi-samples", n_phi, "Phase samples per angle")->capture_default_str();
  geo_geom.add(geo);

  // ingest ----------------------------------------------------------------
  auto* ing = app.add_subcommand("ingest", "Build a dataset from captured image files");
  std::string ing_manifest;
  ing->add_option("--manifest", ing_manifest, "Ingestion manifest")->required();

  // info ------------------------------------------------------------------
  auto* info = app.add_subcommand("info", "Show version, or the manifest of a dataset/model");
  std::string info_path;
  info->add_option("path", info_path, "Dataset or model directory");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      fail(ErrorCategory::invalid_argument, e.what());
    }

    if (gen->parsed()) {
      const fs::path out = require_out(g);
      DatasetConfig c;
      c.basis = resolve_basis(gen_dim, gen_basis);
      c.n_samples = gen_samples;
      c.image_mode = parse_mode(gen_mode);
      c.law = parse_law(gen_law);
      c.train_fraction = gen_train;
      c.shift = gen_shift;
      c.seed = g.seed;
      c.geometry = gen_geom.build();
      if (noise_sigma > 0 || noise_poisson || noise_jitter > 0) {
        c.noise = NoiseSpec{noise_sigma, noise_poisson, noise_jitter};
      }
      const Dataset ds = generate_dataset(c);
      save_dataset(ds, out);
      write_resolved_config(app, out);
      std::cout << "dataset " << out.string() << ": " << ds.size() << " samples, basis "
                << c.basis.to_string() << ", mode " << mode_name(c.image_mode) << ", train "
                << ds.train.size() << ", test " << ds.test.size() << ", seed " << c.seed << "\n";
    } else if (train->parsed()) {
      const fs::path out = require_out(g);
      const Dataset ds = load_dataset(train_data);
      FitOptions fo;
      if (train_mode) fo.mode = parse_mode(*train_mode);
      const ImageMode mode = fo.mode.value_or(ds.config.image_mode);
      if (latent_total) {
        fo.budget = LatentBudget::from_total(*latent_total, mode);
      } else {
        fo.budget = LatentBudget::per_channel(per_channel.value_or(8), mode);
      }
      fo.regressor = parse_regressor(train_reg);
      require(ridge >= 0, ErrorCategory::invalid_argument, "--ridge must be >= 0");
      fo.linear.ridge_lambda = ridge;
      fo.etr = etr;
      fo.etr.seed = g.seed;
      fo.concatenated_pca = concat;
      fo.pca.whiten = whiten;
      const PipelineModel model = fit_pipeline(ds, fo);
      save_model(model, out);
      write_resolved_config(app, out);
      std::cout << "model " << out.string() << ": mode " << mode_name(model.mode) << ", latent "
                << model.budget.primary << "+" << model.budget.shifted << " (total "
                << model.latent_dim() << "), regressor " << regressor_name(model.regressor)
                << ", trained on " << model.n_train << " samples\n";
      if (model.regressor == RegressorKind::linear && model.linear.rank_deficient) {
        std::cout << "note: least-squares system was rank deficient (rank " << model.linear.rank
                  << "); minimum-norm solution used\n";
      }
    } else if (eval->parsed()) {
      const PipelineModel model = load_model(eval_model);
      const Dataset ds = load_dataset(eval_data);
      const Against against = parse_against(eval_against);
      const FidelityStats s = evaluate(model, ds, against);
      std::cout << "mean_fidelity " << fmt(s.mean) << "\nstderr " << fmt(s.stderr_mean) << "\nn_test "
                << s.n() << "\ndegenerate " << s.degenerate_count << "\nagainst "
                << against_name(against) << "\n";
      if (!g.out.empty()) {
        const fs::path out(g.out);
        write_resolved_config(app, out);
        auto summary = open_out(out / "summary.csv");
        summary << kCsvHeader << ",against\n";
        write_sweep_row(summary, model.latent_dim(), model.mode, model.regressor, s);
        summary << ',' << against_name(against) << '\n';
        auto per = open_out(out / "samples.csv");
        per << "index,fidelity\n";
        for (std::size_t i = 0; i < s.n(); ++i) per << ds.test[i] << ',' << fmt(s.fidelities[i]) << '\n';
      }
    } else if (sweep->parsed()) {
      const fs::path out = require_out(g);
      const Dataset ds = load_dataset(sweep_data);
      std::vector<ImageMode> modes;
      for (const auto& m : sweep_modes) modes.push_back(parse_mode(m));
      std::vector<RegressorKind> regs;
      for (const auto& r : sweep_regs) regs.push_back(parse_regressor(r));
      SweepOptions so;
      so.etr.n_trees = sweep_etr.n_trees;
      so.etr.min_samples_split = sweep_etr.min_samples_split;
      so.etr.seed = g.seed;
      const auto rows = sweep_latent_dims(ds, sweep_dims, regs, modes, so);
      write_resolved_config(app, out);
      auto csv = open_out(out / "sweep.csv");
      csv << kCsvHeader << '\n';
      for (const SweepRow& r : rows) {
        std::ostringstream line;
        line << r.total_dims << ',' << mode_name(r.mode) << ',' << regressor_name(r.regressor) << ','
             << fmt(r.mean_fidelity) << ',' << fmt(r.stderr_mean) << ',' << r.n_test;
        csv << line.str() << '\n';
        std::cout << line.str() << '\n';
      }
    } else if (sym->parsed()) {
      const fs::path out = require_out(g);
      const Dataset ds = load_dataset(sym_data);
      const int total = sym_dims.value_or(bloch_length(ds.dimension()));
      SweepOptions so;
      so.etr.seed = g.seed;
      const SymmetryReport rep = symmetry_analysis(ds, total, parse_regressor(sym_reg), so);
      write_resolved_config(app, out);
      auto csv = open_out(out / "symmetry.csv");
      auto txt = open_out(out / "symmetry.txt");
      csv << kCsvHeader << ",against\n";
      const struct {
        ImageMode mode;
        Against against;
        const FidelityStats* stats;
      } cells[] = {{ImageMode::single, Against::correct, &rep.single_correct},
                   {ImageMode::single, Against::flipped, &rep.single_flipped},
                   {ImageMode::pair, Against::correct, &rep.pair_correct},
                   {ImageMode::pair, Against::flipped, &rep.pair_flipped}};
      for (const auto& cell : cells) {
        write_sweep_row(csv, total, cell.mode, rep.regressor, *cell.stats);
        csv << ',' << against_name(cell.against) << '\n';
        std::ostringstream line;
        line << mode_name(cell.mode) << ' ' << against_name(cell.against) << ": " << fmt(cell.stats->mean)
             << " +- " << fmt(cell.stats->stderr_mean) << " (n=" << cell.stats->n() << ")";
        txt << line.str() << '\n';
        std::cout << line.str() << '\n';
      }
      if (rep.equator) {
        std::ostringstream line;
        line << "equator: mean |b_z| single " << fmt(rep.equator->single_mean_abs_bz) << ", pair "
             << fmt(rep.equator->pair_mean_abs_bz) << ", sampling law " << fmt(rep.equator->law_mean_abs_bz);
        txt << line.str() << '\n';
        std::cout << line.str() << '\n';
      }
    } else if (geo->parsed()) {
      const fs::path out = require_out(g);
      const GeometryReport rep = latent_geometry(thetas, n_phi, geo_geom.build());
      write_resolved_config(app, out);
      auto csv = open_out(out / "geometry.csv");
      auto pts = open_out(out / "latents.csv");
      csv << "theta,radius,rms_residual,diameter\n";
      pts << "theta,phi,z1,z2,z3\n";
      for (const ThetaSlice& s : rep.slices) {
        std::ostringstream line;
        line << fmt(s.theta) << ',' << fmt(s.radius) << ',' << fmt(s.rms_residual) << ',' << fmt(s.diameter);
        csv << line.str() << '\n';
        std::cout << line.str() << '\n';
        for (Eigen::Index k = 0; k < s.latents.rows(); ++k) {
          pts << fmt(s.theta) << ',' << fmt(2.0 * std::numbers::pi * static_cast<double>(k) / n_phi);
          for (int j = 0; j < 3; ++j) pts << ',' << fmt(s.latents(k, j));
          pts << '\n';
        }
      }
    } else if (ing->parsed()) {
      const fs::path out = require_out(g);
      const Dataset ds = ingest_images(ing_manifest);
      save_dataset(ds, out);
      write_resolved_config(app, out);
      std::cout << "dataset " << out.string() << ": " << ds.size() << " samples ingested, "
                << (ds.has_targets() ? "with" : "without") << " targets\n";
    } else if (info->parsed()) {
      std::cout << "oamreg " << kVersion << "\n";
      if (!info_path.empty()) {
        const fs::path p = fs::path(info_path) / "manifest";
        require(fs::is_regular_file(p), ErrorCategory::io, info_path + " has no manifest");
        std::cout << Manifest::read(p).str();
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
