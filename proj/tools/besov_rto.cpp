// besov-rto: run, sweep and diagnose RTO-MH experiments from the shell.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "besov_rto/errors.hpp"
#include "besov_rto/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::optional<std::string> problem;
  std::optional<long long> n;
  std::optional<std::string> wavelet;
  std::optional<double> s;
  std::optional<double> p;
  std::optional<double> lambda;
  std::optional<int> n_samples;
  std::optional<double> eta;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> initial_state;
  std::optional<std::string> output_dir;

  void apply(besov::RunConfig& config) const {
    if (problem) config.problem = besov::parse_problem(*problem);
    if (n) config.n = static_cast<besov::Index>(*n);
    if (wavelet) config.wavelet = *wavelet;
    if (s) config.s = *s;
    if (p) config.p = *p;
    if (lambda) config.lambda = *lambda;
    if (n_samples) config.n_samples = *n_samples;
    if (eta) config.eta = *eta;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (initial_state) config.initial_state = besov::parse_initial_state(*initial_state);
    if (output_dir) config.output_dir = *output_dir;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--problem", o.problem, "inpainting, deconvolution or ct");
  cmd->add_option("--n", o.n, "grid size (image side for ct)");
  cmd->add_option("--wavelet", o.wavelet, "haar or db1..db10");
  cmd->add_option("--s", o.s, "Besov smoothness");
  cmd->add_option("--p", o.p, "Besov integrability, >= 1");
  cmd->add_option("--lambda", o.lambda, "prior scale");
  cmd->add_option("--n-samples", o.n_samples, "number of RTO proposals");
  cmd->add_option("--eta", o.eta, "proposal cost threshold");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--workers", o.workers, "proposal threads");
  cmd->add_option("--initial-state", o.initial_state, "map or first_proposal");
  cmd->add_option("--output-dir", o.output_dir, "directory for results");
}

std::vector<besov::Index> parse_sizes(const std::string& text) {
  std::vector<besov::Index> sizes;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long value = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      sizes.push_back(static_cast<besov::Index>(value));
    } catch (const std::exception&) {
      throw besov::ConfigError("bad size '" + item + "' in --sizes");
    }
  }
  return sizes;
}

void report_error(const char* kind, const std::exception& e) {
  std::cerr << nlohmann::json{{"event", "error"}, {"kind", kind}, {"message", e.what()}}.dump()
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomize-then-optimize sampling for linear inverse problems with Besov priors"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  auto* run = app.add_subcommand("run", "sample one posterior and write its outputs");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  add_overrides(run, overrides);

  std::string sizes_text;
  auto* sweep = app.add_subcommand("sweep", "repeat a 1D run over several grid sizes");
  sweep->add_option("--config", config_path, "JSON run configuration")->required();
  sweep->add_option("--sizes", sizes_text, "comma separated powers of two")->required();
  add_overrides(sweep, overrides);

  std::string samples_dir;
  auto* diagnose = app.add_subcommand("diagnose", "recompute chain statistics of a finished run");
  diagnose->add_option("--samples", samples_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*diagnose) {
      const besov::ChainStats stats = besov::diagnose(samples_dir);
      std::cout << besov::stats_to_json(stats).dump(2) << '\n';
      return 0;
    }
    besov::RunConfig config = besov::load_config(config_path);
    overrides.apply(config);
    if (*run) {
      const besov::RunSummary summary = besov::run_experiment(config, &std::cerr);
      std::cout << nlohmann::json{{"output_dir", summary.output_dir.string()},
                                  {"acceptance_rate", summary.chain.acceptance_rate},
                                  {"accepted_count", summary.chain.accepted_count},
                                  {"ess_median", summary.stats.ess_median}}
                       .dump()
                << '\n';
    } else {
      const besov::SweepResult result =
          besov::discretization_sweep(config, parse_sizes(sizes_text), &std::cerr);
      nlohmann::json table = nlohmann::json::array();
      for (besov::Index a = 0; a < result.differences.rows(); ++a) {
        std::vector<double> row(static_cast<std::size_t>(result.differences.cols()));
        for (besov::Index b = 0; b < result.differences.cols(); ++b) {
          row[static_cast<std::size_t>(b)] = result.differences(a, b);
        }
        table.push_back(row);
      }
      std::cout << nlohmann::json{{"sizes", result.sizes},
                                  {"differences", table},
                                  {"warnings", result.warnings}}
                       .dump()
                << '\n';
    }
    return 0;
  } catch (const besov::NumericalError& e) {
    report_error("numerical", e);
    return kExitNumerical;
  } catch (const besov::Error& e) {
    report_error("config", e);
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error("internal", e);
    return 1;
  }
}
