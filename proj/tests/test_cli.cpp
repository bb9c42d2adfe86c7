#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "oamreg/imagefile.hpp"
#include "oamreg/store.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / ("oamreg_test_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run(const std::string& args) {
  const fs::path log = work() / "last.log";
  const std::string cmd = std::string("\"") + OAMREG_BIN + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::ostringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
    ++files;
  }
  EXPECT_GT(files, 0);
}

std::string p(const std::string& name) { return "\"" + (work() / name).string() + "\""; }

// One small dataset and linear model shared by the tests below.
void ensure_fixture() {
  static const bool ready = [] {
    EXPECT_EQ(run("gen --dim 2 --samples 300 --grid 32 --seed 3 --out " + p("ds")).code, 0);
    EXPECT_EQ(run("train --data " + p("ds") + " --latent-total 3 --out " + p("model")).code, 0);
    return true;
  }();
  (void)ready;
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  const CliResult v = run("--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.output.find("0.1.0"), std::string::npos);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, GenIsByteReproducible) {
  ensure_fixture();
  ASSERT_EQ(run("gen --dim 2 --samples 300 --grid 32 --out " + p("ds2") + " --seed 3").code, 0);
  expect_same_tree(work() / "ds", work() / "ds2");
  ASSERT_TRUE(fs::exists(work() / "ds" / "config.ini"));
  ASSERT_EQ(run("gen --dim 2 --samples 300 --grid 32 --seed 4 --out " + p("ds3")).code, 0);
  EXPECT_NE(slurp(work() / "ds" / "primary.f32"), slurp(work() / "ds3" / "primary.f32"));
}

TEST(Cli, ConfigReplayReproducesOutputs) {
  ensure_fixture();
  ASSERT_EQ(run("gen --config " + p("ds/config.ini") + " --out " + p("replay")).code, 0);
  expect_same_tree(work() / "ds", work() / "replay");
}

TEST(Cli, TrainAndEvalOutputs) {
  ensure_fixture();
  ASSERT_EQ(run("train --data " + p("ds") + " --latent-total 3 --out " + p("model2")).code, 0);
  expect_same_tree(work() / "model", work() / "model2");
  const CliResult e = run("eval --model " + p("model") + " --data " + p("ds") + " --out " + p("eval"));
  ASSERT_EQ(e.code, 0) << e.output;
  EXPECT_NE(e.output.find("mean"), std::string::npos);
  EXPECT_EQ(first_line(work() / "eval" / "summary.csv"), "total_dims,mode,regressor,mean_fidelity,stderr,n_test,against");
  EXPECT_EQ(first_line(work() / "eval" / "samples.csv"), "index,fidelity");
  EXPECT_TRUE(fs::exists(work() / "eval" / "config.ini"));
}

TEST(Cli, SweepSymmetryGeometry) {
  ensure_fixture();
  for (const char* name : {"sweep_a", "sweep_b"}) {
    ASSERT_EQ(run("sweep --data " + p("ds") + " --dims 2,3 --modes pair,single --out " + p(name)).code, 0);
  }
  expect_same_tree(work() / "sweep_a", work() / "sweep_b");
  EXPECT_EQ(first_line(work() / "sweep_a" / "sweep.csv"), "total_dims,mode,regressor,mean_fidelity,stderr,n_test");

  const CliResult s = run("symmetry --data " + p("ds") + " --out " + p("sym"));
  ASSERT_EQ(s.code, 0) << s.output;
  EXPECT_EQ(first_line(work() / "sym" / "symmetry.csv"), "total_dims,mode,regressor,mean_fidelity,stderr,n_test,against");
  EXPECT_NE(slurp(work() / "sym" / "symmetry.txt").find("equator"), std::string::npos);

  for (const char* name : {"geo_a", "geo_b"}) {
    ASSERT_EQ(run("geometry --phi-samples 16 --grid 32 --out " + p(name)).code, 0);
  }
  expect_same_tree(work() / "geo_a", work() / "geo_b");
  EXPECT_EQ(first_line(work() / "geo_a" / "geometry.csv"), "theta,radius,rms_residual,diameter");
}

TEST(Cli, IngestRoundTrip) {
  ensure_fixture();
  const oamreg::Dataset ds = oamreg::load_dataset(work() / "ds");
  const fs::path cap = work() / "captures";
  fs::create_directories(cap);
  std::ofstream man(cap / "list.txt");
  man << "grid = 32\n";
  for (int i = 0; i < 4; ++i) {
    const auto pair = ds.pair(ds.test[static_cast<std::size_t>(i)]);
    oamreg::write_image(cap / ("p" + std::to_string(i) + ".png"), pair.primary);
    oamreg::write_image(cap / ("s" + std::to_string(i) + ".pgm"), pair.shifted);
    man << "sample = p" << i << ".png s" << i << ".pgm\n";
  }
  man.close();
  const CliResult r = run("ingest --manifest " + p("captures/list.txt") + " --out " + p("ingested"));
  ASSERT_EQ(r.code, 0) << r.output;
  const oamreg::Dataset back = oamreg::load_dataset(work() / "ingested");
  EXPECT_EQ(back.size(), 4);
  EXPECT_FALSE(back.has_targets());
  // no ground truth: eval must refuse
  const CliResult e = run("eval --model " + p("model") + " --data " + p("ingested"));
  EXPECT_EQ(e.code, 4);
  EXPECT_NE(e.output.find("error: incompatible:"), std::string::npos) << e.output;
}

TEST(Cli, ErrorCategoriesAndExitCodes) {
  ensure_fixture();
  const CliResult bad_flag = run("gen --dim 2 --bogus --out " + p("x"));
  EXPECT_EQ(bad_flag.code, 2);
  const CliResult bad_dim = run("gen --dim 1 --out " + p("x"));
  EXPECT_EQ(bad_dim.code, 2);
  EXPECT_NE(bad_dim.output.find("error: invalid-argument:"), std::string::npos) << bad_dim.output;
  const CliResult missing = run("train --data " + p("nowhere") + " --out " + p("x"));
  EXPECT_EQ(missing.code, 3);
  EXPECT_NE(missing.output.find("error: io:"), std::string::npos) << missing.output;
  ASSERT_EQ(run("gen --dim 3 --samples 60 --grid 32 --out " + p("ds_d3")).code, 0);
  const CliResult mismatch = run("eval --model " + p("model") + " --data " + p("ds_d3"));
  EXPECT_EQ(mismatch.code, 4) << mismatch.output;
  fs::create_directories(work() / "broken");
  std::ofstream(work() / "broken" / "manifest") << "format = oamreg-dataset\nversion = 0.1.0\n";
  const CliResult broken = run("train --data " + p("broken") + " --out " + p("x"));
  EXPECT_EQ(broken.code, 5) << broken.output;
  EXPECT_NE(broken.output.find("error: format:"), std::string::npos);
}
