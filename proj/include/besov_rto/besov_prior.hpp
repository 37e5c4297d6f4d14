#pragma once

#include <cstdint>

#include "besov_rto/forward_models.hpp"
#include "besov_rto/gen_gaussian.hpp"
#include "besov_rto/wavelet.hpp"

namespace besov {

/// Discrete Besov B^s_{p,p} prior on a periodic dyadic grid:
///   pi(f) ~ exp(-tau ||B f||_p^p),  B = S W.
/// The regularity condition s < r of the wavelet is not enforced.
class BesovPrior {
 public:
  BesovPrior(WaveletSpec wavelet, int dimension, int levels, double s, double p, double lambda);

  double s() const { return s_; }
  double p() const { return gg_.shape(); }
  double lambda() const { return gg_.lambda(); }
  double kappa() const { return transform_.besov().weights().kappa; }
  double tau() const { return gg_.tau(); }
  double alpha() const { return gg_.alpha(); }
  int dimension() const { return wavelet().dimension(); }
  int levels() const { return wavelet().levels(); }
  Index size() const { return wavelet().size(); }

  const WaveletSystem& wavelet() const { return transform_.besov().wavelet(); }
  const BesovWeights& weights() const { return transform_.besov().weights(); }
  const BesovTransform& besov() const { return transform_.besov(); }
  const GenGaussian& gen_gaussian() const { return gg_; }
  const PriorTransform& transform() const { return transform_; }

  /// A draw f = B^{-1} g(h), h ~ N(0, I); h is generated in canonical
  /// coefficient order, so coarse coefficients only depend on the seed.
  Vector sample(std::uint64_t seed) const;
  /// ||B f||_p.
  double norm(const Vector& f) const;
  /// -tau ||B f||_p^p.
  double log_density(const Vector& f) const;

 private:
  double s_;
  GenGaussian gg_;
  PriorTransform transform_;
};

/// Posterior of y = A f + epsilon, epsilon ~ N(0, sigma^2 I), under a Besov
/// prior. Densities are unnormalized logs.
class Posterior {
 public:
  Posterior(BesovPrior prior, ForwardPtr forward, Vector y, double sigma);

  const BesovPrior& prior() const { return prior_; }
  const LinearForward& forward() const { return *forward_; }
  const ForwardPtr& forward_ptr() const { return forward_; }
  const Vector& data() const { return y_; }
  double sigma() const { return sigma_; }
  Index n() const { return prior_.size(); }
  Index m() const { return y_.size(); }

  /// -||A f - y||^2 / (2 sigma^2).
  double log_likelihood(const Vector& f) const;
  /// log_likelihood(f) - tau ||B f||_p^p.
  double log_posterior_f(const Vector& f) const;
  /// -||A T(h) - y||^2 / (2 sigma^2) - ||h||^2 / 2.
  double log_posterior_h(const Vector& h) const;

 private:
  BesovPrior prior_;
  ForwardPtr forward_;
  Vector y_;
  double sigma_;
};

}  // namespace besov
