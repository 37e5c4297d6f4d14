#include "besov_rto/besov_prior.hpp"

#include <cmath>
#include <random>

#include "besov_rto/errors.hpp"

namespace besov {

BesovPrior::BesovPrior(WaveletSpec wavelet, int dimension, int levels, double s, double p,
                       double lambda)
    : s_(s),
      gg_(p, lambda),
      transform_(gg_, BesovTransform(WaveletSystem(wavelet, dimension, levels),
                                     besov_weights(s, p, dimension, levels))) {}

Vector BesovPrior::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector h(size());
  for (Index i = 0; i < h.size(); ++i) h[i] = normal(rng);
  return transform_.apply(h);
}

double BesovPrior::norm(const Vector& f) const {
  const Vector z = besov().apply(f);
  return std::pow(z.array().abs().pow(p()).sum(), 1.0 / p());
}

double BesovPrior::log_density(const Vector& f) const {
  return -tau() * besov().apply(f).array().abs().pow(p()).sum();
}

Posterior::Posterior(BesovPrior prior, ForwardPtr forward, Vector y, double sigma)
    : prior_(std::move(prior)), forward_(std::move(forward)), y_(std::move(y)), sigma_(sigma) {
  if (!forward_) throw ParameterError("posterior needs a forward operator");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("noise sigma must be > 0");
  if (forward_->cols() != prior_.size()) {
    throw DimensionError("forward operator input size differs from the prior dimension");
  }
  if (forward_->rows() != y_.size()) {
    throw DimensionError("data length differs from the forward operator output size");
  }
}

double Posterior::log_likelihood(const Vector& f) const {
  return -(forward_->apply(f) - y_).squaredNorm() / (2.0 * sigma_ * sigma_);
}

double Posterior::log_posterior_f(const Vector& f) const {
  return log_likelihood(f) + prior_.log_density(f);
}

double Posterior::log_posterior_h(const Vector& h) const {
  return log_likelihood(prior_.transform().apply(h)) - 0.5 * h.squaredNorm();
}

}  // namespace besov
