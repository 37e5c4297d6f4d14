#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "besov_rto/errors.hpp"
#include "besov_rto/runner.hpp"

using namespace besov;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class RunnerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("besov_rto_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig small_config(const std::string& sub) const {
    RunConfig c;
    c.problem = ProblemKind::Deconvolution;
    c.n = 32;
    c.n_samples = 200;
    c.seed = 5;
    c.output_dir = (dir_ / sub).string();
    return c;
  }

  fs::path dir_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(BESOV_RTO_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.problem = ProblemKind::Inpainting;
  c.n = 256;
  c.wavelet = "db4";
  c.s = 1.7;
  c.p = 1.2;
  c.eta = 1e-7;
  c.seed = 123456789012345ULL;
  c.probes = {0.1, 0.5};
  c.removed = {{0.2, 0.3}};
  c.optimizer.max_iterations = 77;
  c.initial_state = InitialState::FirstProposal;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  EXPECT_EQ(config_from_json(json::parse(config_to_json(RunConfig{}).dump())), RunConfig{});
}

TEST(RunConfig, StrictParsing) {
  EXPECT_THROW(config_from_json(json{{"problme", "ct"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"optimizer", {{"tolerance", 1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"n", "64"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"removed", {{0.1, 0.2, 0.3}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json::array()), ConfigError);
  EXPECT_THROW(config_from_json(json{{"problem", "mri"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"initial_state", "prior"}}), ConfigError);
  const RunConfig partial = config_from_json(json{{"n", 128}, {"p", 1.1}});
  EXPECT_EQ(partial.n, 128);
  EXPECT_EQ(partial.p, 1.1);
  EXPECT_EQ(partial.wavelet, "haar");
}

TEST(RunConfig, Validation) {
  auto invalid = [](auto mutate) {
    RunConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  invalid([](RunConfig& c) { c.n = 48; });
  invalid([](RunConfig& c) { c.p = 0.5; });
  invalid([](RunConfig& c) { c.lambda = 0.0; });
  invalid([](RunConfig& c) { c.relative_noise = -0.1; });
  invalid([](RunConfig& c) { c.n_samples = 0; });
  invalid([](RunConfig& c) { c.workers = 0; });
  invalid([](RunConfig& c) { c.wavelet = "coif2"; });
  invalid([](RunConfig& c) {
    c.problem = ProblemKind::Ct;
    c.n = 256;
  });
  RunConfig ok;
  EXPECT_NO_THROW(ok.validate());
  ok.problem = ProblemKind::Ct;
  EXPECT_EQ(ok.unknowns(), 64 * 64);
}

TEST(RunConfig, ProbeCoordinates) {
  RunConfig c;
  c.n = 512;
  c.probes = {0.2, 0.0, 0.75, 0.9999};
  EXPECT_EQ(probe_coordinates(c), (std::vector<Index>{102, 0, 384, 0}));
  c.probes = {1.0};
  EXPECT_THROW(probe_coordinates(c), ParameterError);
  c.probes = {0.5};
  c.problem = ProblemKind::Ct;
  EXPECT_THROW(probe_coordinates(c), ParameterError);
}

TEST(BuildProblem, InpaintingDimensions) {
  RunConfig c;
  c.problem = ProblemKind::Inpainting;
  c.n = 512;
  const Problem problem = build_problem(c);
  EXPECT_EQ(problem.posterior->m(), 461);
  EXPECT_EQ(problem.truth.size(), 512);
  EXPECT_NEAR(problem.observation.sigma, 0.02 * problem.truth.norm() / std::sqrt(461.0), 1e-15);
}

TEST_F(RunnerTest, RunWritesConsistentOutputs) {
  const RunConfig c = small_config("run");
  const RunSummary summary = run_experiment(c);
  const fs::path out = c.output_dir;
  EXPECT_EQ(fs::file_size(out / "samples_f.bin"), 32u * 200u * 8u);
  EXPECT_EQ(fs::file_size(out / "samples_h.bin"), 32u * 200u * 8u);
  for (const char* name : {"mean.csv", "ci_lower.csv", "ci_upper.csv", "truth.csv", "data.csv",
                           "diagnostics.json", "manifest.json", "samples_meta.json"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }

  const json manifest = json::parse(read_file(out / "manifest.json"));
  EXPECT_NEAR(manifest["derived"]["kappa"].get<double>(), 1.0 + 0.5 - 1.0 / 1.5, 1e-15);
  EXPECT_EQ(manifest["derived"]["m"].get<int>(), 32);
  EXPECT_EQ(config_from_json(manifest["config"]), c);

  const auto mean = read_csv(out / "mean.csv");
  ASSERT_EQ(mean.size(), 33u);
  EXPECT_EQ(mean[0], (std::vector<std::string>{"index", "x", "value"}));
  for (const auto& row : mean) EXPECT_EQ(row.size(), 3u);
  EXPECT_NEAR(std::stod(mean[5][2]), summary.stats.mean[4], 1e-12 * std::abs(summary.stats.mean[4]) + 1e-15);

  const Matrix samples = read_samples(out / "samples_f.bin", 32, 200);
  EXPECT_EQ(samples, summary.chain.f_samples);

  for (Index probe : probe_coordinates(c)) {
    const auto trace = read_csv(out / ("trace_" + std::to_string(probe) + ".csv"));
    EXPECT_EQ(trace.size(), 201u);
    const auto acf_rows = read_csv(out / ("acf_" + std::to_string(probe) + ".csv"));
    ASSERT_GE(acf_rows.size(), 2u);
    EXPECT_EQ(acf_rows[0], (std::vector<std::string>{"lag", "acf"}));
    EXPECT_DOUBLE_EQ(std::stod(acf_rows[1][1]), 1.0);
  }

  const ChainStats again = diagnose(out);
  EXPECT_EQ(again.mean, summary.stats.mean);
  EXPECT_EQ(again.accepted_count, summary.chain.accepted_count);
}

TEST_F(RunnerTest, SameSeedSameBytes) {
  RunConfig a = small_config("a");
  RunConfig b = small_config("b");
  run_experiment(a);
  run_experiment(b);
  EXPECT_EQ(read_file(fs::path(a.output_dir) / "samples_f.bin"),
            read_file(fs::path(b.output_dir) / "samples_f.bin"));
  RunConfig c = small_config("c");
  c.seed = 6;
  run_experiment(c);
  EXPECT_NE(read_file(fs::path(a.output_dir) / "samples_f.bin"),
            read_file(fs::path(c.output_dir) / "samples_f.bin"));
}

TEST_F(RunnerTest, CtRunWritesCoefficientMaps) {
  RunConfig c = small_config("ct");
  c.problem = ProblemKind::Ct;
  c.n = 8;
  c.n_angles = 6;
  c.n_detectors = 11;
  c.n_samples = 150;
  run_experiment(c);
  const fs::path out = c.output_dir;
  const auto mean = read_csv(out / "mean.csv");
  ASSERT_EQ(mean.size(), 65u);
  EXPECT_EQ(mean[0], (std::vector<std::string>{"index", "row", "col", "value"}));
  EXPECT_EQ(read_csv(out / "sinogram.csv").size(), 67u);
  for (int j = 0; j < 3; ++j) {
    for (int orientation = 1; orientation <= 3; ++orientation) {
      const auto rows = read_csv(out / ("coeff_level" + std::to_string(j) + "_or" +
                                        std::to_string(orientation) + ".csv"));
      ASSERT_EQ(rows.size(), static_cast<std::size_t>(1 + (1 << (2 * j))));
      EXPECT_EQ(rows[0], (std::vector<std::string>{"row", "col", "posterior_mean", "posterior_sample"}));
    }
  }
}

TEST_F(RunnerTest, FailedRunLeavesNoPartialOutput) {
  RunConfig c = small_config("fail");
  c.eta = 1e-299;
  c.optimizer.step_tolerance = 1e-300;
  c.optimizer.max_iterations = 1;
  c.p = 1.1;
  EXPECT_THROW(run_experiment(c), NumericalError);
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "manifest.json"));
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "samples_f.bin"));
}

TEST_F(RunnerTest, SweepTable) {
  RunConfig c = small_config("sweep");
  c.n_samples = 150;
  const SweepResult sweep = discretization_sweep(c, {32, 64});
  ASSERT_EQ(sweep.differences.rows(), 2);
  ASSERT_EQ(sweep.differences.cols(), 2);
  EXPECT_EQ(sweep.differences(0, 0), 0.0);
  EXPECT_EQ(sweep.differences(1, 1), 0.0);
  EXPECT_EQ(sweep.differences(0, 1), sweep.differences(1, 0));
  EXPECT_GT(sweep.differences(0, 1), 0.0);
  EXPECT_EQ(sweep.means.rows(), 32);
  const Vector fine = read_samples(fs::path(c.output_dir) / "n64" / "samples_f.bin", 64, 150)
                          .rowwise()
                          .mean();
  for (Index i = 0; i < 32; ++i) EXPECT_NEAR(sweep.means(i, 1), fine[2 * i], 1e-12);
  const double expected = (sweep.means.col(0) - sweep.means.col(1)).norm() / sweep.means.col(1).norm();
  EXPECT_NEAR(sweep.differences(0, 1), expected, 1e-12);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "sweep_differences.csv"));

  c.problem = ProblemKind::Ct;
  EXPECT_THROW(discretization_sweep(c, {8, 16}), ConfigError);
}

TEST_F(RunnerTest, CliExitCodes) {
  const fs::path config = dir_ / "config.json";
  {
    json doc = config_to_json(small_config("cli"));
    doc["n_samples"] = 150;
    std::ofstream(config) << doc.dump();
  }
  EXPECT_EQ(run_cli("run --config " + config.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "cli" / "manifest.json"));
  EXPECT_EQ(run_cli("diagnose --samples " + (dir_ / "cli").string()), 0);
  EXPECT_EQ(run_cli("run --config " + config.string() + " --n 48"), 2);
  EXPECT_EQ(run_cli("run --config " + (dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("diagnose --samples " + (dir_ / "nowhere").string()), 2);
  EXPECT_EQ(run_cli("bogus"), 2);

  RunConfig failing = small_config("cli_fail");
  failing.p = 1.1;
  failing.eta = 1e-299;
  failing.optimizer.step_tolerance = 1e-300;
  failing.optimizer.max_iterations = 1;
  const fs::path failing_config = dir_ / "failing.json";
  std::ofstream(failing_config) << config_to_json(failing).dump();
  EXPECT_EQ(run_cli("run --config " + failing_config.string()), 3);
}
