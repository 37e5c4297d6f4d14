#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "besov_rto/besov_prior.hpp"
#include "besov_rto/gauss_newton.hpp"

namespace besov {

/// Chain start: the MAP point, or the first valid proposal (accepted
/// unconditionally, which skips the burn-in needed when log c(h_MAP) sits far
/// below the typical proposal weight).
enum class InitialState { Map, FirstProposal };

std::string to_string(InitialState state);
InitialState parse_initial_state(const std::string& name);

struct RtoConfig {
  int n_samples = 1000;
  /// Cost-acceptance threshold; defaults to max(1e-8, 1e3 * step tolerance).
  std::optional<double> eta;
  OptimizerOptions optimizer;
  std::uint64_t seed = 0;
  int workers = 1;
  InitialState initial_state = InitialState::Map;

  double resolved_eta() const;
  /// Throws ParameterError on inconsistent settings.
  void validate() const;
};

/// The transformed posterior in h written as a nonlinear least-squares
/// problem: -log pi(h | y) = 1/2 ||F(h)||^2 + const with
///   F(h)   = [h; (A B^{-1} g(h) - y) / sigma],
///   J_A(h) = [I; A B^{-1} J_g(h) / sigma].
/// A B^{-1} is materialized densely at construction.
class TransformedProblem {
 public:
  explicit TransformedProblem(const Posterior& posterior);

  Index n() const { return coefficient_forward_.cols(); }
  Index m() const { return coefficient_forward_.rows(); }
  double inv_sigma() const { return inv_sigma_; }
  const Posterior& posterior() const { return *posterior_; }
  /// A B^{-1}, m x n.
  const Matrix& coefficient_forward() const { return coefficient_forward_; }
  /// (A B^{-1})^T A B^{-1}, n x n.
  const Matrix& gram() const { return gram_; }

  Vector residual(const Vector& h) const;
  Matrix jacobian(const Vector& h) const;

  // Least-squares interface used by damped_gauss_newton.
  double cost(const Vector& h) const;
  Linearization linearize(const Vector& h) const;

 private:
  const Posterior* posterior_;
  double inv_sigma_;
  Matrix coefficient_forward_;
  Matrix gram_;  // M^T M
};

/// Everything computed offline before proposals are drawn.
///
/// The top block of J_A is the identity, so J_A(h_map) = Q R gives Q1 = R^{-1}
/// and, with D = J_g(h), D0 = J_g(h_map) and E = (D0 D)^{1/2} / sigma,
///   Q^T J_A(h) = R^{-T} (I + D0 G D / sigma^2),
///   |det Q^T J_A(h)| = det(I + E G E) / |det R|,
/// where G = (A B^{-1})^T A B^{-1} and R^T R = I + D0 G D0 / sigma^2.
struct RtoState {
  SolveReport map;
  Vector h_map;
  /// Thin Q of J_A(h_map), (m + n) x n with orthonormal columns.
  Matrix q;
  /// Matching upper-triangular R.
  Matrix r;
  double log_c_map = 0.0;

  // Cached blocks: Q = [Q1; Q2], P = Q2^T A B^{-1}.
  Matrix q1_transpose;
  Matrix projected_forward;
  Vector projected_data;  // Q2^T y
  Vector map_derivative;  // diagonal of D0
  /// Cholesky factor of I + D0 G D0 / sigma^2.
  Eigen::LLT<Matrix> map_system;
  double log_det_r = 0.0;
};

struct Proposal {
  Vector h;
  /// e = ||Q^T (F(h) - v)||^2.
  double cost = 0.0;
  /// log c(h) = log|det Q^T J_A(h)| + 1/2 ||F(h)||^2 - 1/2 ||Q^T F(h)||^2.
  double log_c = 0.0;
  bool valid = false;
  int iterations = 0;
  int saturated = 0;
};

struct ChainResult {
  Matrix proposals;  ///< n x n_samples
  Matrix h_samples;  ///< n x n_samples
  Matrix f_samples;  ///< n x n_samples, T(h_samples)
  std::vector<double> log_c;
  std::vector<double> cost;
  std::vector<char> valid;
  std::vector<char> accepted;
  int accepted_count = 0;
  double acceptance_rate = 0.0;
  double eta = 0.0;

  Vector h_map;
  double log_c_map = 0.0;
  SolveReport map;
  int saturated_components = 0;

  double map_seconds = 0.0;
  double proposal_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Randomize-then-optimize Metropolis-Hastings sampler for a linear inverse
/// problem under a Besov prior.
class RtoSampler {
 public:
  RtoSampler(const Posterior& posterior, RtoConfig config);
  RtoSampler(const RtoSampler&) = delete;
  RtoSampler& operator=(const RtoSampler&) = delete;

  const TransformedProblem& problem() const { return problem_; }
  const RtoConfig& config() const { return config_; }

  SolveReport solve_map(const Vector& h_init) const;
  /// Thin QR of the materialized Jacobian at h_map; throws NumericalError on
  /// rank deficiency.
  Matrix compute_q(const Vector& h_map) const;
  RtoState prepare(SolveReport map) const;

  double log_weight(const RtoState& state, const Vector& h) const;
  /// One proposal using the RNG stream seeded with `stream`.
  Proposal propose(const RtoState& state, std::uint64_t stream) const;

  ChainResult run_chain() const;
  ChainResult run_chain(const RtoState& state) const;

 private:
  Vector projected_residual(const RtoState& state, const Vector& h, const Vector& qv,
                            Vector* log_derivative, int* saturated) const;
  Matrix projected_jacobian(const RtoState& state, const Vector& log_derivative) const;
  /// Lower triangle of I + E G E for the given log J_g(h).
  Matrix scaled_system(const RtoState& state, const Vector& log_derivative) const;
  double log_abs_det(const RtoState& state, const Eigen::LLT<Matrix>& system) const;

  Posterior posterior_;
  RtoConfig config_;
  TransformedProblem problem_;
};

}  // namespace besov
