#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "besov_rto/diagnostics.hpp"
#include "besov_rto/forward_models.hpp"
#include "besov_rto/rto_sampler.hpp"

namespace besov {

enum class ProblemKind { Inpainting, Deconvolution, Ct };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem(const std::string& name);

struct RunConfig {
  ProblemKind problem = ProblemKind::Deconvolution;
  /// Grid size for 1D problems, image side for CT.
  Index n = 64;
  std::string wavelet = "haar";
  double s = 1.0;
  double p = 1.5;
  double lambda = 1.0;
  double relative_noise = 0.02;
  int n_samples = 1000;
  std::optional<double> eta;
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  int workers = 1;
  InitialState initial_state = InitialState::Map;

  double kernel_sigma = 0.02;
  std::vector<Interval> removed = {{0.1, 0.15}, {0.425, 0.475}};
  Index n_angles = 30;
  Index n_detectors = 91;
  /// Physical positions whose chains and ACFs are exported (1D only).
  std::vector<double> probes = {0.2, 0.6, 0.75};
  OptimizerOptions optimizer;

  /// Throws ConfigError on values no module would accept.
  void validate() const;
  int dimension() const { return problem == ProblemKind::Ct ? 2 : 1; }
  /// Number of unknowns: n for 1D, n^2 for CT.
  Index unknowns() const;
  RtoConfig sampler_config() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Strict: unknown keys and wrong types raise ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// Everything needed to run: truth, data and posterior.
struct Problem {
  RunConfig config;
  Vector truth;
  Observation observation;
  ForwardPtr forward;
  std::optional<Posterior> posterior;
};

Problem build_problem(const RunConfig& config);

/// Nearest grid indices round(x n) of the configured probe positions.
/// Throws ParameterError for CT or a position outside [0, 1).
std::vector<Index> probe_coordinates(const RunConfig& config);

struct RunSummary {
  ChainResult chain;
  ChainStats stats;
  nlohmann::json manifest;
  std::filesystem::path output_dir;
};

/// Builds the problem, runs MAP + RTO-MH and writes every output file. On
/// failure the files written so far are removed and the error is rethrown.
/// Structured progress records go to `log` when given.
RunSummary run_experiment(const RunConfig& config, std::ostream* log = nullptr);

struct SweepResult {
  std::vector<Index> sizes;
  /// One column per size, sampled on the coarsest grid.
  Matrix means;
  /// Pairwise ||m_a - m_b|| / ||m_finer||.
  Matrix differences;
  std::vector<std::string> warnings;
};

/// Runs a 1D problem at each size (in output_dir/n<size>) and writes
/// sweep_means.csv and sweep_differences.csv to the base output directory.
SweepResult discretization_sweep(const RunConfig& base, const std::vector<Index>& sizes,
                                 std::ostream* log = nullptr);

/// Recomputes chain statistics from a run directory.
ChainStats diagnose(const std::filesystem::path& run_dir);

nlohmann::json stats_to_json(const ChainStats& stats);

/// Reads a sample file written by run_experiment into an n x count matrix.
Matrix read_samples(const std::filesystem::path& file, Index n, Index count);

}  // namespace besov
