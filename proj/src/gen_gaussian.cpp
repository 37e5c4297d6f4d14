#include "besov_rto/gen_gaussian.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "besov_rto/errors.hpp"

namespace besov {
namespace {

// Evaluate in double rather than promoting to long double internally.
using DoublePolicy =
    boost::math::policies::policy<boost::math::policies::promote_double<false>>;

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTailStart = 8.0;
constexpr double kSaturation = 38.0;

// log erfc(z) for z > 0 without underflow.
double log_erfc(double z) {
  if (z < 25.0) return std::log(std::erfc(z));
  const double inv = 1.0 / (z * z);
  const double series = 1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv;
  return -z * z - std::log(z * std::sqrt(std::numbers::pi)) + std::log(series);
}

// log Q(a, t), the regularized upper incomplete gamma function, for large t.
double log_upper_gamma(double a, double t) {
  if (t < 500.0) return std::log(boost::math::gamma_q(a, t, DoublePolicy()));
  const double inv = 1.0 / t;
  const double series =
      1.0 + (a - 1.0) * inv + (a - 1.0) * (a - 2.0) * inv * inv +
      (a - 1.0) * (a - 2.0) * (a - 3.0) * inv * inv * inv;
  return (a - 1.0) * std::log(t) - t - std::lgamma(a) + std::log(series);
}

// Solves log Q(a, t) = log_q for t by Newton iterations in log space.
double inverse_log_upper_gamma(double a, double log_q) {
  double t = std::max(-log_q, 1.0);
  const double lg = std::lgamma(a);
  for (int iter = 0; iter < 100; ++iter) {
    const double lq = log_upper_gamma(a, t);
    const double dlq = -std::exp((a - 1.0) * std::log(t) - t - lg - lq);
    double step = (lq - log_q) / dlq;
    if (t - step <= 0.0) step = 0.5 * t;
    t -= step;
    if (std::abs(step) <= 1e-12 * t) break;
  }
  return t;
}

}  // namespace

GenGaussian::GenGaussian(double p, double lambda) : p_(p), lambda_(lambda) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw ParameterError("generalized Gaussian shape p must be >= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("lambda must be positive");
  }
  const double log_ratio = std::lgamma(1.0 / p) - std::lgamma(3.0 / p);
  alpha_ = std::exp(0.5 * log_ratio - std::log(lambda) / p);
  tau_ = std::exp(-0.5 * p * log_ratio) * lambda;
  log_normalizer_ = std::log(p) - std::log(2.0 * alpha_) - std::lgamma(1.0 / p);
}

double GenGaussian::variance() const {
  return alpha_ * alpha_ * std::exp(std::lgamma(3.0 / p_) - std::lgamma(1.0 / p_));
}

double GenGaussian::log_pdf(double x) const {
  return log_normalizer_ - std::pow(std::abs(x) / alpha_, p_);
}

double GenGaussian::cdf(double x) const {
  const double t = std::pow(std::abs(x) / alpha_, p_);
  const double a = 1.0 / p_;
  if (x >= 0.0) return 0.5 + 0.5 * boost::math::gamma_p(a, t, DoublePolicy());
  return 0.5 * boost::math::gamma_q(a, t, DoublePolicy());
}

double GenGaussian::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile argument must lie in (0, 1)");
  const double a = 1.0 / p_;
  const double centered = std::abs(2.0 * u - 1.0);
  double t = 0.0;
  if (centered == 0.0) return 0.0;
  if (centered < 0.5) {
    t = boost::math::gamma_p_inv(a, centered, DoublePolicy());
  } else {
    t = boost::math::gamma_q_inv(a, 2.0 * std::min(u, 1.0 - u), DoublePolicy());
  }
  const double x = alpha_ * std::pow(t, a);
  return u < 0.5 ? -x : x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

TransformPoint map_standard_normal(double h, const GenGaussian& gg) {
  if (!std::isfinite(h)) throw DomainError("prior transform evaluated at a non-finite point");
  const double a = 1.0 / gg.shape();
  const double magnitude = std::abs(h);
  const double z = magnitude / kSqrt2;

  // Solve Phi_gg(x) = Phi_normal(|h|) for x >= 0 through t = (x / alpha)^p,
  // using the side of the incomplete gamma function that avoids cancellation.
  double t = 0.0;
  TransformPoint point;
  if (magnitude == 0.0) {
    t = 0.0;
  } else if (magnitude <= 1.0) {
    t = boost::math::gamma_p_inv(a, std::erf(z), DoublePolicy());
  } else if (magnitude <= kTailStart) {
    t = boost::math::gamma_q_inv(a, std::erfc(z), DoublePolicy());
  } else {
    t = inverse_log_upper_gamma(a, log_erfc(z));
    point.saturated = magnitude > kSaturation;
  }
  const double x = gg.alpha() * std::pow(t, a);
  point.value = h < 0.0 ? -x : x;
  point.log_derivative = normal_log_pdf(h) - gg.log_pdf(x);
  return point;
}

double g1d(double h, const GenGaussian& gg) { return map_standard_normal(h, gg).value; }

double g1d_deriv(double h, const GenGaussian& gg) {
  return std::exp(map_standard_normal(h, gg).log_derivative);
}

PriorTransform::PriorTransform(GenGaussian gg, BesovTransform besov)
    : gg_(gg), besov_(std::move(besov)) {}

Vector PriorTransform::g(const Vector& h, Vector* log_derivative, int* saturated) const {
  if (h.size() != size()) throw DimensionError("h has the wrong length for the prior map");
  Vector out(h.size());
  if (log_derivative != nullptr) log_derivative->resize(h.size());
  int count = 0;
  for (Index i = 0; i < h.size(); ++i) {
    const TransformPoint point = map_standard_normal(h[i], gg_);
    out[i] = point.value;
    if (log_derivative != nullptr) (*log_derivative)[i] = point.log_derivative;
    count += point.saturated ? 1 : 0;
  }
  if (saturated != nullptr) *saturated = count;
  return out;
}

Vector PriorTransform::apply(const Vector& h) const { return besov_.apply_inverse(g(h)); }

Vector PriorTransform::jacobian_diag(const Vector& h) const {
  Vector log_derivative;
  g(h, &log_derivative);
  return log_derivative.array().exp();
}

}  // namespace besov
