#include "besov_rto/forward_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "besov_rto/errors.hpp"

namespace besov {

Matrix LinearForward::apply_columns(const Matrix& columns) const {
  if (columns.rows() != cols()) throw DimensionError("operator input size mismatch");
  Matrix out(rows(), columns.cols());
  for (Index j = 0; j < columns.cols(); ++j) out.col(j) = apply(columns.col(j));
  return out;
}

Matrix LinearForward::dense() const { return apply_columns(Matrix::Identity(cols(), cols())); }

// ---------------------------------------------------------------------------

DenseForward::DenseForward(Matrix a) : a_(std::move(a)) {
  if (a_.size() == 0) throw DimensionError("empty forward matrix");
}

Vector DenseForward::apply(const Vector& f) const {
  if (f.size() != cols()) throw DimensionError("operator input size mismatch");
  return a_ * f;
}

Vector DenseForward::adjoint(const Vector& g) const {
  if (g.size() != rows()) throw DimensionError("adjoint input size mismatch");
  return a_.transpose() * g;
}

Matrix DenseForward::apply_columns(const Matrix& columns) const {
  if (columns.rows() != cols()) throw DimensionError("operator input size mismatch");
  return a_ * columns;
}

OperatorDescriptor DenseForward::descriptor() const {
  return {"dense", {{"m", static_cast<double>(rows())}, {"n", static_cast<double>(cols())}}};
}

// ---------------------------------------------------------------------------

InpaintingForward::InpaintingForward(Index n, std::vector<Interval> removed)
    : n_(n), removed_(std::move(removed)) {
  if (n < 1) throw ParameterError("inpainting grid must have at least one point");
  for (const Interval& iv : removed_) {
    if (!(iv.begin >= 0.0 && iv.end <= 1.0 && iv.begin < iv.end)) {
      throw ParameterError("removed intervals must be non-empty and lie inside [0, 1)");
    }
  }
  std::vector<Interval> sorted = removed_;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].begin < sorted[i - 1].end) {
      throw ParameterError("removed intervals overlap");
    }
  }
  for (Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    const bool drop = std::any_of(sorted.begin(), sorted.end(), [x](const Interval& iv) {
      return x >= iv.begin && x < iv.end;
    });
    if (!drop) kept_.push_back(i);
  }
  if (kept_.empty()) throw ParameterError("inpainting removes every grid point");
}

Vector InpaintingForward::apply(const Vector& f) const {
  if (f.size() != n_) throw DimensionError("operator input size mismatch");
  Vector out(rows());
  for (std::size_t i = 0; i < kept_.size(); ++i) out[static_cast<Index>(i)] = f[kept_[i]];
  return out;
}

Vector InpaintingForward::adjoint(const Vector& g) const {
  if (g.size() != rows()) throw DimensionError("adjoint input size mismatch");
  Vector out = Vector::Zero(n_);
  for (std::size_t i = 0; i < kept_.size(); ++i) out[kept_[i]] = g[static_cast<Index>(i)];
  return out;
}

OperatorDescriptor InpaintingForward::descriptor() const {
  OperatorDescriptor d{"inpainting",
                       {{"n", static_cast<double>(n_)}, {"m", static_cast<double>(rows())}}};
  for (std::size_t i = 0; i < removed_.size(); ++i) {
    d.parameters["removed_" + std::to_string(i) + "_begin"] = removed_[i].begin;
    d.parameters["removed_" + std::to_string(i) + "_end"] = removed_[i].end;
  }
  return d;
}

// ---------------------------------------------------------------------------

ConvolutionForward::ConvolutionForward(Index n, double kernel_sigma)
    : n_(n), kernel_sigma_(kernel_sigma) {
  if (n < 2) throw ParameterError("convolution grid needs at least two points");
  if (!(kernel_sigma > 0.0) || !(3.0 * kernel_sigma < 0.5)) {
    throw ParameterError("kernel sigma must satisfy 0 < 3 sigma < 1/2");
  }
  half_width_ = static_cast<Index>(std::floor(3.0 * kernel_sigma * static_cast<double>(n)));
  kernel_.resize(2 * half_width_ + 1);
  for (Index k = -half_width_; k <= half_width_; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(n);
    kernel_[k + half_width_] = std::exp(-x * x / (2.0 * kernel_sigma * kernel_sigma));
  }
  kernel_ /= kernel_.sum();
}

Vector ConvolutionForward::apply(const Vector& f) const {
  if (f.size() != n_) throw DimensionError("operator input size mismatch");
  Vector out = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (Index k = -half_width_; k <= half_width_; ++k) {
      acc += kernel_[k + half_width_] * f[((i - k) % n_ + n_) % n_];
    }
    out[i] = acc;
  }
  return out;
}

OperatorDescriptor ConvolutionForward::descriptor() const {
  return {"convolution",
          {{"n", static_cast<double>(n_)},
           {"kernel_sigma", kernel_sigma_},
           {"kernel_half_width", static_cast<double>(half_width_)},
           {"kernel_renormalized", 1.0}}};
}

// ---------------------------------------------------------------------------

RadonForward::RadonForward(Index side, Index n_angles, Index n_detectors)
    : side_(side), n_angles_(n_angles), n_detectors_(n_detectors) {
  if (side < 1 || n_angles < 1 || n_detectors < 1) {
    throw ParameterError("Radon geometry sizes must be positive");
  }
  const double pixel = 2.0 / static_cast<double>(side);
  const double step = 0.5 * pixel;
  const double reach = std::numbers::sqrt2;
  const Index n_steps = static_cast<Index>(std::ceil(2.0 * reach / step));
  const double last = static_cast<double>(side - 1);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rows() * n_steps * 2));
  for (Index a = 0; a < n_angles; ++a) {
    const double theta = angle(a);
    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);
    for (Index k = 0; k < n_detectors; ++k) {
      const double eta = detector(k);
      const Index row = a * n_detectors + k;
      for (Index s = 0; s < n_steps; ++s) {
        const double t = -reach + (static_cast<double>(s) + 0.5) * step;
        const double x = t * sin_t + eta * cos_t;
        const double y = -t * cos_t + eta * sin_t;
        if (std::abs(x) > 1.0 || std::abs(y) > 1.0) continue;
        const double u = std::clamp((x + 1.0) / pixel - 0.5, 0.0, last);
        const double v = std::clamp((1.0 - y) / pixel - 0.5, 0.0, last);
        const Index c0 = static_cast<Index>(std::floor(u));
        const Index r0 = static_cast<Index>(std::floor(v));
        const Index c1 = std::min(c0 + 1, side - 1);
        const Index r1 = std::min(r0 + 1, side - 1);
        const double fu = u - static_cast<double>(c0);
        const double fv = v - static_cast<double>(r0);
        const std::array<std::pair<Index, double>, 4> taps = {{
            {r0 * side + c0, (1.0 - fu) * (1.0 - fv)},
            {r0 * side + c1, fu * (1.0 - fv)},
            {r1 * side + c0, (1.0 - fu) * fv},
            {r1 * side + c1, fu * fv},
        }};
        for (const auto& [col, weight] : taps) {
          if (weight != 0.0) triplets.emplace_back(row, col, step * weight);
        }
      }
    }
  }
  matrix_.resize(rows(), cols());
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
}

double RadonForward::angle(Index a) const {
  return std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles_);
}

double RadonForward::detector(Index k) const {
  if (n_detectors_ == 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n_detectors_ - 1);
}

Vector RadonForward::apply(const Vector& f) const {
  if (f.size() != cols()) throw DimensionError("operator input size mismatch");
  return matrix_ * f;
}

Vector RadonForward::adjoint(const Vector& g) const {
  if (g.size() != rows()) throw DimensionError("adjoint input size mismatch");
  return matrix_.transpose() * g;
}

Matrix RadonForward::apply_columns(const Matrix& columns) const {
  if (columns.rows() != cols()) throw DimensionError("operator input size mismatch");
  return matrix_ * columns;
}

OperatorDescriptor RadonForward::descriptor() const {
  return {"radon",
          {{"image_side", static_cast<double>(side_)},
           {"n_angles", static_cast<double>(n_angles_)},
           {"n_detectors", static_cast<double>(n_detectors_)}}};
}

ForwardPtr inpainting_operator(Index n, std::vector<Interval> removed) {
  return std::make_shared<InpaintingForward>(n, std::move(removed));
}

ForwardPtr convolution_operator(Index n, double kernel_sigma) {
  return std::make_shared<ConvolutionForward>(n, kernel_sigma);
}

ForwardPtr radon_operator(Index image_side, Index n_angles, Index n_detectors) {
  return std::make_shared<RadonForward>(image_side, n_angles, n_detectors);
}

// ---------------------------------------------------------------------------

double phantom_1d_value(double x) {
  x -= std::floor(x);
  if (x < 0.35) {
    const double z = (x - 0.15) / 0.08;
    return 0.6 * std::exp(-z * z);
  }
  if (x < 0.45) return 0.2;
  if (x < 0.6) return 0.8;
  if (x < 0.7) return 0.8 - 4.0 * (x - 0.6);
  if (x < 0.85) return 0.4;
  return 0.0;
}

Vector phantom_1d(Index n) {
  if (n < 1 || (n & (n - 1)) != 0) throw DimensionError("phantom length must be a power of two");
  Vector f(n);
  for (Index i = 0; i < n; ++i) {
    f[i] = phantom_1d_value(static_cast<double>(i) / static_cast<double>(n));
  }
  return f;
}

Vector phantom_shepp_logan(Index side) {
  if (side < 1) throw ParameterError("phantom side must be positive");
  struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
  };
  constexpr std::array<Ellipse, 10> ellipses = {{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
      {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
      {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
      {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
      {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
      {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
      {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
  }};
  const double pixel = 2.0 / static_cast<double>(side);
  Vector image = Vector::Zero(side * side);
  for (Index r = 0; r < side; ++r) {
    const double y = 1.0 - (static_cast<double>(r) + 0.5) * pixel;
    for (Index c = 0; c < side; ++c) {
      const double x = -1.0 + (static_cast<double>(c) + 0.5) * pixel;
      double value = 0.0;
      for (const Ellipse& e : ellipses) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - e.x0;
        const double dy = y - e.y0;
        const double xr = dx * std::cos(phi) + dy * std::sin(phi);
        const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) value += e.value;
      }
      image[r * side + c] = std::clamp(value, 0.0, 1.0);
    }
  }
  return image;
}

// ---------------------------------------------------------------------------

Observation make_data(const LinearForward& forward, const Vector& f_true, double relative_level,
                      std::uint64_t seed) {
  if (!(relative_level > 0.0)) throw ParameterError("relative noise level must be positive");
  const Vector clean = forward.apply(f_true);
  const double m = static_cast<double>(clean.size());
  Observation obs;
  obs.sigma = relative_level * f_true.norm() / std::sqrt(m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector noise(clean.size());
  for (Index i = 0; i < noise.size(); ++i) noise[i] = obs.sigma * normal(rng);
  obs.y = clean + noise;
  const double truth = f_true.norm();
  obs.realized_level = truth > 0.0 ? noise.norm() / truth : 0.0;
  return obs;
}

}  // namespace besov
