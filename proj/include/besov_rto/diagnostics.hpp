#pragma once

#include <span>

#include "besov_rto/rto_sampler.hpp"

namespace besov {

/// Biased (1/N normalized) sample autocorrelation at lags 0..max_lag.
/// Throws DegenerateChainError for a constant chain.
Vector acf(std::span<const double> chain, int max_lag);

/// Effective sample size of M chains (rows of `chains`, N columns each) with
/// Geyer's initial positive sequence:
///   ESS = M N / (-1 + 2 sum_{t=0}^{K} (rho_{2t} + rho_{2t+1})),
/// K the last index before the first non-positive pair sum. The ACF is
/// averaged across chains.
double ess(const Matrix& chains);
double ess(std::span<const double> chain);

struct ChainStats {
  Vector mean;
  Vector ci_lower;  ///< 2.5% empirical quantile
  Vector ci_upper;  ///< 97.5% empirical quantile
  /// Per-coordinate ESS; NaN for constant coordinates.
  Vector ess;
  int degenerate_coordinates = 0;
  double ess_min = 0.0;
  double ess_median = 0.0;
  double ess_max = 0.0;
  int n_samples = 0;
  int accepted_count = 0;
  double acceptance_rate = 0.0;
  double seconds = 0.0;
  double ess_per_second_min = 0.0;
  double ess_per_second_median = 0.0;
  double ess_per_second_max = 0.0;
};

/// Linear-interpolation empirical quantile (q in [0, 1]) of a sample.
double empirical_quantile(std::span<const double> values, double q);

/// Pointwise summary of a chain stored as columns of `samples` (n x N).
/// `level` is the credible level of the interval (0.95 by default). Requires
/// at least 100 accepted samples.
ChainStats summarize(const Matrix& samples, int accepted_count, double acceptance_rate,
                     double seconds, double level = 0.95);
ChainStats summarize(const ChainResult& result, double level = 0.95);

}  // namespace besov
