#pragma once

#include "besov_rto/wavelet.hpp"

namespace besov {

/// Zero-mean generalized Gaussian with shape p >= 1 parametrized by the scaled
/// regularization parameter lambda:
///   alpha = (Gamma(1/p) / Gamma(3/p))^{1/2} lambda^{-1/p},
///   tau   = (Gamma(1/p) / Gamma(3/p))^{-p/2} lambda,
/// so that tau * alpha^p = 1 and the variance is 1 / lambda^{2/p}.
class GenGaussian {
 public:
  GenGaussian(double p, double lambda);

  double shape() const { return p_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  double tau() const { return tau_; }
  double variance() const;

  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Throws DomainError unless 0 < u < 1.
  double quantile(double u) const;

 private:
  double p_;
  double lambda_;
  double alpha_;
  double tau_;
  double log_normalizer_;
};

double normal_cdf(double x);
double normal_log_pdf(double x);

/// Value of the map g1d(h) = Phi_gg^{-1}(Phi_normal(h)) together with
/// log g1d'(h). `saturated` marks |h| > 38, where both tails are evaluated
/// through asymptotic expansions.
struct TransformPoint {
  double value = 0.0;
  double log_derivative = 0.0;
  bool saturated = false;
};

TransformPoint map_standard_normal(double h, const GenGaussian& gg);

double g1d(double h, const GenGaussian& gg);
double g1d_deriv(double h, const GenGaussian& gg);

/// Componentwise map g plus the prior map T(h) = B^{-1} g(h), which pushes a
/// standard Gaussian vector h to a Besov-distributed signal f.
class PriorTransform {
 public:
  PriorTransform(GenGaussian gg, BesovTransform besov);

  const GenGaussian& gen_gaussian() const { return gg_; }
  const BesovTransform& besov() const { return besov_; }
  Index size() const { return besov_.size(); }

  /// g(h) componentwise; optionally also log g1d'(h_i) and the number of
  /// saturated components.
  Vector g(const Vector& h, Vector* log_derivative = nullptr, int* saturated = nullptr) const;
  /// T(h) = B^{-1} g(h).
  Vector apply(const Vector& h) const;
  /// Diagonal of J_g(h), strictly positive.
  Vector jacobian_diag(const Vector& h) const;

 private:
  GenGaussian gg_;
  BesovTransform besov_;
};

}  // namespace besov
