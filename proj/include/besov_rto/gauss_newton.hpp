#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "besov_rto/wavelet.hpp"

namespace besov {

struct OptimizerOptions {
  /// Stop once ||J^T r|| falls below this.
  double gradient_tolerance = 1e-8;
  /// Stop once ||step|| <= step_tolerance * (||x|| + step_tolerance).
  double step_tolerance = 1e-12;
  int max_iterations = 200;
  double initial_damping = 1e-4;

  friend bool operator==(const OptimizerOptions&, const OptimizerOptions&) = default;
};

enum class SolveStatus { Converged, MaxIterations, Stalled };

inline std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::Stalled:
      return "stalled";
  }
  return "unknown";
}

struct SolveReport {
  Vector x;
  double cost = 0.0;  ///< 1/2 ||r(x)||^2
  double gradient_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// Gauss-Newton model of 1/2 ||r(x)||^2 at a point.
struct Linearization {
  double cost = 0.0;
  Vector gradient;  ///< J^T r
  Matrix normal;    ///< J^T J
};

/// Levenberg-damped Gauss-Newton. `Problem` provides
///   double cost(const Vector&) const;            // 1/2 ||r||^2
///   Linearization linearize(const Vector&) const;
/// Damping starts at options.initial_damping, is multiplied by 10 after a
/// rejected step and divided by 10 after an accepted one.
template <class Problem>
SolveReport damped_gauss_newton(const Problem& problem, Vector x,
                                const OptimizerOptions& options) {
  constexpr double kMaxDamping = 1e12;
  SolveReport report;
  double damping = options.initial_damping;
  Linearization lin = problem.linearize(x);

  for (;;) {
    report.gradient_norm = lin.gradient.norm();
    if (!std::isfinite(lin.cost) || !std::isfinite(report.gradient_norm)) {
      report.status = SolveStatus::Stalled;
      break;
    }
    if (report.gradient_norm < options.gradient_tolerance) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (report.iterations >= options.max_iterations) {
      report.status = SolveStatus::MaxIterations;
      break;
    }
    ++report.iterations;

    bool accepted = false;
    bool small_step = false;
    while (!accepted) {
      Matrix damped = lin.normal;
      damped.diagonal().array() += damping;
      Eigen::LLT<Matrix> llt(damped);
      if (llt.info() != Eigen::Success) {
        damping *= 10.0;
        if (damping > kMaxDamping) break;
        continue;
      }
      const Vector step = -llt.solve(lin.gradient);
      const Vector trial = x + step;
      const double trial_cost = problem.cost(trial);
      if (std::isfinite(trial_cost) && trial_cost <= lin.cost) {
        accepted = true;
        damping = std::max(damping / 10.0, 1e-15);
        small_step = step.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance);
        x = trial;
      } else {
        damping *= 10.0;
        if (damping > kMaxDamping) break;
      }
    }
    if (!accepted) {
      report.status = SolveStatus::Stalled;
      break;
    }
    lin = problem.linearize(x);
    if (small_step) {
      report.gradient_norm = lin.gradient.norm();
      report.status = SolveStatus::Converged;
      break;
    }
  }
  report.x = std::move(x);
  report.cost = lin.cost;
  return report;
}

}  // namespace besov
