#include "besov_rto/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "besov_rto/errors.hpp"

namespace besov {
namespace {

// Lazily evaluated autocorrelation of one chain.
class Autocorrelation {
 public:
  explicit Autocorrelation(std::span<const double> chain) : centered_(chain.size()) {
    if (chain.size() < 10) throw InsufficientSamplesError("chain needs at least 10 samples");
    double mean = 0.0;
    for (double x : chain) mean += x;
    mean /= static_cast<double>(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) centered_[i] = chain[i] - mean;
    for (double x : centered_) variance_ += x * x;
    variance_ /= static_cast<double>(chain.size());
    if (!(variance_ > 0.0)) throw DegenerateChainError("chain has zero variance");
    // Rounding in the mean can leave a tiny spurious variance on a constant chain.
    if (variance_ <= 1e-28 * mean * mean) throw DegenerateChainError("chain has zero variance");
  }

  std::size_t size() const { return centered_.size(); }

  double operator()(std::size_t lag) const {
    if (lag >= centered_.size()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < centered_.size(); ++i) {
      acc += centered_[i] * centered_[i + lag];
    }
    return acc / static_cast<double>(centered_.size()) / variance_;
  }

 private:
  std::vector<double> centered_;
  double variance_ = 0.0;
};

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

Vector acf(std::span<const double> chain, int max_lag) {
  if (max_lag < 0) throw ParameterError("max_lag must be non-negative");
  const Autocorrelation rho(chain);
  Vector out(max_lag + 1);
  for (int t = 0; t <= max_lag; ++t) out[t] = rho(static_cast<std::size_t>(t));
  out[0] = 1.0;
  return out;
}

double ess(const Matrix& chains) {
  if (chains.rows() < 1) throw InsufficientSamplesError("ess needs at least one chain");
  std::vector<Autocorrelation> rhos;
  rhos.reserve(static_cast<std::size_t>(chains.rows()));
  for (Index c = 0; c < chains.rows(); ++c) {
    const Vector row = chains.row(c).transpose();
    rhos.emplace_back(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  }
  const std::size_t n = rhos.front().size();
  auto mean_rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (const auto& r : rhos) acc += r(lag);
    return acc / static_cast<double>(rhos.size());
  };

  double pair_sum_total = 0.0;
  for (std::size_t t = 0; 2 * t + 1 < n + 1; ++t) {
    const double pair = (t == 0 ? 1.0 : mean_rho(2 * t)) + mean_rho(2 * t + 1);
    if (!(pair > 0.0)) break;
    pair_sum_total += pair;
  }
  const double denominator = -1.0 + 2.0 * pair_sum_total;
  return static_cast<double>(chains.rows()) * static_cast<double>(n) / denominator;
}

double ess(std::span<const double> chain) {
  const Eigen::Map<const Eigen::RowVectorXd> row(chain.data(), static_cast<Index>(chain.size()));
  return ess(Matrix(row));
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InsufficientSamplesError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = position - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

ChainStats summarize(const Matrix& samples, int accepted_count, double acceptance_rate,
                     double seconds, double level) {
  if (accepted_count < 100) {
    throw InsufficientSamplesError("summaries need at least 100 accepted samples, got " +
                                   std::to_string(accepted_count));
  }
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("credible level must lie in (0, 1)");
  const Index n = samples.rows();
  const Index count = samples.cols();
  ChainStats stats;
  stats.n_samples = static_cast<int>(count);
  stats.accepted_count = accepted_count;
  stats.acceptance_rate = acceptance_rate;
  stats.seconds = seconds;
  stats.mean = samples.rowwise().mean();
  stats.ci_lower.resize(n);
  stats.ci_upper.resize(n);
  stats.ess.resize(n);

  const double tail = 0.5 * (1.0 - level);
  std::vector<double> finite_ess;
  std::vector<double> row(static_cast<std::size_t>(count));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < count; ++k) row[static_cast<std::size_t>(k)] = samples(i, k);
    stats.ci_lower[i] = empirical_quantile(row, tail);
    stats.ci_upper[i] = empirical_quantile(row, 1.0 - tail);
    try {
      stats.ess[i] = ess(std::span<const double>(row));
      finite_ess.push_back(stats.ess[i]);
    } catch (const DegenerateChainError&) {
      stats.ess[i] = std::numeric_limits<double>::quiet_NaN();
      ++stats.degenerate_coordinates;
    }
  }
  if (!finite_ess.empty()) {
    stats.ess_min = *std::min_element(finite_ess.begin(), finite_ess.end());
    stats.ess_max = *std::max_element(finite_ess.begin(), finite_ess.end());
    stats.ess_median = median_of(finite_ess);
  } else {
    stats.ess_min = stats.ess_median = stats.ess_max = std::numeric_limits<double>::quiet_NaN();
  }
  if (seconds > 0.0) {
    stats.ess_per_second_min = stats.ess_min / seconds;
    stats.ess_per_second_median = stats.ess_median / seconds;
    stats.ess_per_second_max = stats.ess_max / seconds;
  }
  return stats;
}

ChainStats summarize(const ChainResult& result, double level) {
  return summarize(result.f_samples, result.accepted_count, result.acceptance_rate,
                   result.total_seconds, level);
}

}  // namespace besov
