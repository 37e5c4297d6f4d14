#include "besov_rto/rto_sampler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <utility>

#include <Eigen/QR>
#include <Eigen/IterativeLinearSolvers>

#include "besov_rto/errors.hpp"
#include "besov_rto/rng.hpp"

namespace besov {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr int kMaxNewtonIterations = 100;
constexpr int kMaxHalvings = 12;
constexpr double kKrylovTolerance = 1e-12;
constexpr int kMaxKrylovIterations = 400;

// Preconditioner for Eigen's conjugate gradient: diag(1/t) L^{-T} L^{-1}
// diag(1/t) for a fixed Cholesky factor L and scaling t.
class FixedCholeskyPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  void attach(const Eigen::LLT<Matrix>* llt, Vector scale) {
    llt_ = llt;
    scale_ = std::move(scale);
  }
  template <class M>
  FixedCholeskyPreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  FixedCholeskyPreconditioner& factorize(const M&) { return *this; }
  template <class M>
  FixedCholeskyPreconditioner& compute(const M&) { return *this; }
  template <class Rhs>
  Vector solve(const Rhs& b) const {
    return llt_->solve(b.cwiseQuotient(scale_)).cwiseQuotient(scale_);
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const Eigen::LLT<Matrix>* llt_ = nullptr;
  Vector scale_;
};

double log_det_spd(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::pair<Matrix, Matrix> thin_qr(const Matrix& j) {
  const Eigen::HouseholderQR<Matrix> qr(j);
  const Index n = j.cols();
  Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const Vector diag = r.diagonal().cwiseAbs();
  if (diag.minCoeff() < 1e-12 * diag.maxCoeff()) {
    throw NumericalError("Jacobian at the MAP point is rank deficient");
  }
  return {qr.householderQ() * Matrix::Identity(j.rows(), n), std::move(r)};
}

// 1/2 ||r(h)||^2 for the projected RTO equation Q^T (F(h) - v) = 0.
struct ProjectedProblem {
  std::function<Vector(const Vector&, Vector*)> residual;
  std::function<Matrix(const Vector&)> jacobian;

  double cost(const Vector& h) const { return 0.5 * residual(h, nullptr).squaredNorm(); }

  Linearization linearize(const Vector& h) const {
    Vector log_derivative;
    const Vector r = residual(h, &log_derivative);
    const Matrix j = jacobian(log_derivative);
    Linearization lin;
    lin.cost = 0.5 * r.squaredNorm();
    lin.gradient = j.transpose() * r;
    lin.normal = j.transpose() * j;
    return lin;
  }
};

}  // namespace

std::string to_string(InitialState state) {
  return state == InitialState::Map ? "map" : "first_proposal";
}

InitialState parse_initial_state(const std::string& name) {
  if (name == "map") return InitialState::Map;
  if (name == "first_proposal") return InitialState::FirstProposal;
  throw ParameterError("unknown initial state '" + name + "' (expected map or first_proposal)");
}

double RtoConfig::resolved_eta() const {
  return eta.value_or(std::max(1e-8, 1e3 * optimizer.step_tolerance));
}

void RtoConfig::validate() const {
  if (n_samples < 1) throw ParameterError("n_samples must be positive");
  if (workers < 1) throw ParameterError("workers must be positive");
  if (optimizer.max_iterations < 1) throw ParameterError("max_iterations must be positive");
  if (!(optimizer.gradient_tolerance > 0.0) || !(optimizer.step_tolerance > 0.0)) {
    throw ParameterError("optimizer tolerances must be positive");
  }
  if (!(optimizer.initial_damping > 0.0)) throw ParameterError("initial damping must be > 0");
  const double threshold = resolved_eta();
  if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ParameterError("eta must be > 0");
  if (!(threshold > optimizer.step_tolerance)) {
    throw ParameterError("eta must exceed the optimizer step tolerance");
  }
}

// ---------------------------------------------------------------------------

TransformedProblem::TransformedProblem(const Posterior& posterior)
    : posterior_(&posterior), inv_sigma_(1.0 / posterior.sigma()) {
  const Index n = posterior.n();
  const BesovTransform& besov = posterior.prior().besov();
  Matrix inverse_b(n, n);
  Vector unit = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    unit[i] = 1.0;
    inverse_b.col(i) = besov.apply_inverse(unit);
    unit[i] = 0.0;
  }
  coefficient_forward_ = posterior.forward().apply_columns(inverse_b);
  gram_ = coefficient_forward_.transpose() * coefficient_forward_;
}

Vector TransformedProblem::residual(const Vector& h) const {
  const Vector g = posterior_->prior().transform().g(h);
  Vector out(n() + m());
  out.head(n()) = h;
  out.tail(m()) = inv_sigma_ * (coefficient_forward_ * g - posterior_->data());
  return out;
}

Matrix TransformedProblem::jacobian(const Vector& h) const {
  const Vector d = posterior_->prior().transform().jacobian_diag(h);
  Matrix j(n() + m(), n());
  j.topRows(n()).setIdentity();
  j.bottomRows(m()) = inv_sigma_ * coefficient_forward_ * d.asDiagonal();
  return j;
}

double TransformedProblem::cost(const Vector& h) const { return 0.5 * residual(h).squaredNorm(); }

Linearization TransformedProblem::linearize(const Vector& h) const {
  Vector log_derivative;
  const Vector g = posterior_->prior().transform().g(h, &log_derivative);
  const Vector d = log_derivative.array().exp();
  const Vector data_residual = inv_sigma_ * (coefficient_forward_ * g - posterior_->data());
  Linearization lin;
  lin.cost = 0.5 * (h.squaredNorm() + data_residual.squaredNorm());
  lin.gradient =
      h + inv_sigma_ * d.cwiseProduct(coefficient_forward_.transpose() * data_residual);
  lin.normal = (inv_sigma_ * inv_sigma_) * (d.asDiagonal() * gram_ * d.asDiagonal());
  lin.normal.diagonal().array() += 1.0;
  return lin;
}

// ---------------------------------------------------------------------------

RtoSampler::RtoSampler(const Posterior& posterior, RtoConfig config)
    : posterior_(posterior), config_(config), problem_(posterior_) {
  config_.validate();
}

SolveReport RtoSampler::solve_map(const Vector& h_init) const {
  if (h_init.size() != problem_.n()) throw DimensionError("initial point has the wrong size");
  if (!h_init.allFinite()) throw ParameterError("initial point must be finite");
  return damped_gauss_newton(problem_, h_init, config_.optimizer);
}

Matrix RtoSampler::compute_q(const Vector& h_map) const {
  return thin_qr(problem_.jacobian(h_map)).first;
}

RtoState RtoSampler::prepare(SolveReport map) const {
  const Index n = problem_.n();
  const Index m = problem_.m();
  RtoState state;
  state.h_map = map.x;
  state.map = std::move(map);
  std::tie(state.q, state.r) = thin_qr(problem_.jacobian(state.h_map));
  state.q1_transpose = state.q.topRows(n).transpose();
  state.projected_forward = state.q.bottomRows(m).transpose() * problem_.coefficient_forward();
  state.projected_data = state.q.bottomRows(m).transpose() * posterior_.data();
  state.log_det_r = state.r.diagonal().cwiseAbs().array().log().sum();

  Vector log_derivative;
  posterior_.prior().transform().g(state.h_map, &log_derivative);
  state.map_derivative = log_derivative.array().exp();
  state.map_system.compute(scaled_system(state, log_derivative));
  if (state.map_system.info() != Eigen::Success) {
    throw NumericalError("MAP-point system is not positive definite");
  }
  state.log_c_map = log_weight(state, state.h_map);
  return state;
}

Vector RtoSampler::projected_residual(const RtoState& state, const Vector& h, const Vector& qv,
                                      Vector* log_derivative, int* saturated) const {
  const Vector g = posterior_.prior().transform().g(h, log_derivative, saturated);
  return state.q1_transpose * h +
         problem_.inv_sigma() * (state.projected_forward * g - state.projected_data) - qv;
}

Matrix RtoSampler::projected_jacobian(const RtoState& state, const Vector& log_derivative) const {
  const Vector d = log_derivative.array().exp();
  Matrix j = state.q1_transpose;
  j.noalias() += problem_.inv_sigma() * state.projected_forward * d.asDiagonal();
  return j;
}

Matrix RtoSampler::scaled_system(const RtoState& state, const Vector& log_derivative) const {
  const Vector e =
      problem_.inv_sigma() * (state.map_derivative.array() * log_derivative.array().exp()).sqrt();
  Matrix system(e.size(), e.size());
  system.triangularView<Eigen::Lower>() = e.asDiagonal() * problem_.gram() * e.asDiagonal();
  system.diagonal().array() += 1.0;
  return system;
}

double RtoSampler::log_abs_det(const RtoState& state, const Eigen::LLT<Matrix>& system) const {
  if (system.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  return log_det_spd(system) - state.log_det_r;
}

double RtoSampler::log_weight(const RtoState& state, const Vector& h) const {
  Vector log_derivative;
  const Vector zero = Vector::Zero(h.size());
  const Vector projected = projected_residual(state, h, zero, &log_derivative, nullptr);
  const Eigen::LLT<Matrix> system(scaled_system(state, log_derivative));
  const double full = problem_.residual(h).squaredNorm();
  return log_abs_det(state, system) + 0.5 * full - 0.5 * projected.squaredNorm();
}

Proposal RtoSampler::propose(const RtoState& state, std::uint64_t stream) const {
  const Index n = problem_.n();
  const Index m = problem_.m();
  std::mt19937_64 rng(stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n + m);
  for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  const Vector qv = state.q.transpose() * v;
  const double eta = config_.resolved_eta();
  const OptimizerOptions& options = config_.optimizer;

  Proposal out;
  Vector h = state.h_map;
  Vector log_derivative;
  Vector r = projected_residual(state, h, qv, &log_derivative, nullptr);
  double e = r.squaredNorm();

  // Newton on the square system r(h) = 0. Since Q^T J_A(h) = R^{-T} D0^{1/2}
  // D^{-1/2} (I + E G E) (D0 / D)^{1/2}, each step solves the SPD system
  // (I + E G E) w = (D / D0)^{1/2} R^T r by conjugate gradients, then
  // step = (D0 / D)^{1/2} w. The preconditioner is the MAP-point system
  // rescaled by (D / D0)^{1/2} on both sides. Steps are halved until ||r||
  // drops.
  Eigen::ConjugateGradient<Matrix, Eigen::Lower, FixedCholeskyPreconditioner> cg;
  cg.setTolerance(kKrylovTolerance);
  cg.setMaxIterations(kMaxKrylovIterations);
  bool converged = false;
  for (int it = 0; it < kMaxNewtonIterations && std::isfinite(e); ++it) {
    if (e == 0.0) {
      converged = true;
      break;
    }
    const Vector ratio =
        (log_derivative.array().exp() / state.map_derivative.array()).sqrt();
    // CG keeps a reference to the matrix.
    const Matrix system = scaled_system(state, log_derivative);
    cg.preconditioner().attach(&state.map_system, ratio);
    cg.compute(system);
    const Vector rhs = ratio.cwiseProduct(state.r.triangularView<Eigen::Upper>().transpose() * r);
    const Vector step = cg.solve(rhs).cwiseQuotient(ratio);
    if (!step.allFinite()) break;
    double scale = 1.0;
    Vector trial, trial_r, trial_log_derivative;
    double trial_e = e;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, scale *= 0.5) {
      trial = h - scale * step;
      trial_r = projected_residual(state, trial, qv, &trial_log_derivative, nullptr);
      trial_e = trial_r.squaredNorm();
      if (trial_e < e) break;
    }
    ++out.iterations;
    if (!(trial_e < e)) {
      converged = e < 1e-6 * eta;
      break;
    }
    h = std::move(trial);
    r = std::move(trial_r);
    log_derivative = std::move(trial_log_derivative);
    e = trial_e;
    if (scale * step.norm() <= options.step_tolerance * (h.norm() + options.step_tolerance)) {
      converged = true;
      break;
    }
  }

  if (!converged && std::isfinite(e)) {
    ProjectedProblem projected{
        [&](const Vector& x, Vector* log_derivative) {
          return projected_residual(state, x, qv, log_derivative, nullptr);
        },
        [&](const Vector& log_derivative) { return projected_jacobian(state, log_derivative); }};
    SolveReport report = damped_gauss_newton(projected, h, options);
    out.iterations += report.iterations;
    h = std::move(report.x);
  }

  r = projected_residual(state, h, qv, &log_derivative, &out.saturated);
  out.cost = r.squaredNorm();
  const Eigen::LLT<Matrix> system(scaled_system(state, log_derivative));
  const Vector projected = r + qv;
  out.log_c = log_abs_det(state, system) + 0.5 * problem_.residual(h).squaredNorm() -
              0.5 * projected.squaredNorm();
  out.valid = std::isfinite(out.cost) && std::isfinite(out.log_c) && h.allFinite() &&
              out.cost < eta;
  out.h = std::move(h);
  return out;
}

ChainResult RtoSampler::run_chain() const {
  const auto start = Clock::now();
  SolveReport map = solve_map(Vector::Zero(problem_.n()));
  RtoState state = prepare(std::move(map));
  const double map_seconds = seconds_since(start);
  ChainResult result = run_chain(state);
  result.map_seconds = map_seconds;
  result.total_seconds += map_seconds;
  return result;
}

ChainResult RtoSampler::run_chain(const RtoState& state) const {
  const auto start = Clock::now();
  const Index n = problem_.n();
  const int count = config_.n_samples;

  ChainResult result;
  result.eta = config_.resolved_eta();
  result.h_map = state.h_map;
  result.log_c_map = state.log_c_map;
  result.map = state.map;
  result.proposals.resize(n, count);
  result.log_c.assign(static_cast<std::size_t>(count), 0.0);
  result.cost.assign(static_cast<std::size_t>(count), 0.0);
  result.valid.assign(static_cast<std::size_t>(count), 0);
  result.accepted.assign(static_cast<std::size_t>(count), 0);
  std::vector<int> saturated(static_cast<std::size_t>(count), 0);

  // Proposals are independent of each other and of the chain state.
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      const auto slot = static_cast<std::size_t>(i);
      try {
        Proposal p = propose(state, stream_seed(config_.seed, static_cast<std::uint64_t>(i)));
        result.proposals.col(i) = p.h;
        result.log_c[slot] = p.log_c;
        result.cost[slot] = p.cost;
        result.valid[slot] = p.valid ? 1 : 0;
        saturated[slot] = p.saturated;
      } catch (const Error&) {
        result.proposals.col(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        result.cost[slot] = std::numeric_limits<double>::infinity();
        result.valid[slot] = 0;
      }
    }
  };
  if (config_.workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < config_.workers; ++w) pool.emplace_back(worker);
  }
  result.proposal_seconds = seconds_since(start);

  if (std::none_of(result.valid.begin(), result.valid.end(), [](char v) { return v != 0; })) {
    throw ChainError("all " + std::to_string(count) +
                     " RTO proposals were invalid (cost above eta or optimizer failure)");
  }

  // Metropolis-Hastings sweep: accept iff log u < log c(previous) - log c(proposal).
  std::mt19937_64 rng(stream_seed(config_.seed, std::numeric_limits<std::uint64_t>::max()));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  result.h_samples.resize(n, count);
  double current_log_c = state.log_c_map;
  int current = -1;
  const bool start_at_proposal = config_.initial_state == InitialState::FirstProposal;
  for (int i = 0; i < count; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    const double u = uniform(rng);
    const bool first = start_at_proposal && current < 0;
    if (result.valid[slot] && (first || std::log(u) < current_log_c - result.log_c[slot])) {
      result.accepted[slot] = 1;
      ++result.accepted_count;
      current = i;
      current_log_c = result.log_c[slot];
      result.saturated_components += saturated[slot];
    }
    result.h_samples.col(i) = current < 0 ? state.h_map : Vector(result.proposals.col(current));
  }
  result.acceptance_rate = static_cast<double>(result.accepted_count) / count;

  // Back-transform; rejected steps repeat the previous f.
  const PriorTransform& transform = posterior_.prior().transform();
  result.f_samples.resize(n, count);
  for (int i = 0; i < count; ++i) {
    if (i > 0 && !result.accepted[static_cast<std::size_t>(i)]) {
      result.f_samples.col(i) = result.f_samples.col(i - 1);
    } else {
      result.f_samples.col(i) = transform.apply(result.h_samples.col(i));
    }
  }
  result.total_seconds = seconds_since(start);
  return result;
}

}  // namespace besov
