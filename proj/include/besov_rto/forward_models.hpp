#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "besov_rto/wavelet.hpp"

namespace besov {

/// Kind and numeric parameters of a forward operator, echoed into run manifests.
struct OperatorDescriptor {
  std::string kind;
  std::map<std::string, double> parameters;
};

/// A linear operator A: R^n -> R^m with its adjoint. Implementations are
/// immutable, so apply/adjoint may be called concurrently.
class LinearForward {
 public:
  virtual ~LinearForward() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Vector apply(const Vector& f) const = 0;
  virtual Vector adjoint(const Vector& g) const = 0;
  virtual OperatorDescriptor descriptor() const = 0;

  /// A applied to every column of `columns`.
  virtual Matrix apply_columns(const Matrix& columns) const;
  /// Dense m x n matrix, built column by column.
  Matrix dense() const;
};

using ForwardPtr = std::shared_ptr<const LinearForward>;

/// Explicit dense matrix, handy for small synthetic problems.
class DenseForward final : public LinearForward {
 public:
  explicit DenseForward(Matrix a);

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Vector apply(const Vector& f) const override;
  Vector adjoint(const Vector& g) const override;
  OperatorDescriptor descriptor() const override;
  Matrix apply_columns(const Matrix& columns) const override;

 private:
  Matrix a_;
};

/// A half-open interval [begin, end) of [0, 1).
struct Interval {
  double begin = 0.0;
  double end = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Identity with the rows of grid points x_i = i / n inside the removed
/// intervals deleted.
class InpaintingForward final : public LinearForward {
 public:
  InpaintingForward(Index n, std::vector<Interval> removed);

  Index rows() const override { return static_cast<Index>(kept_.size()); }
  Index cols() const override { return n_; }
  Vector apply(const Vector& f) const override;
  Vector adjoint(const Vector& g) const override;
  OperatorDescriptor descriptor() const override;

  const std::vector<Index>& kept_indices() const { return kept_; }

 private:
  Index n_;
  std::vector<Interval> removed_;
  std::vector<Index> kept_;
};

/// Circular convolution on an n-point grid of [0, 1) with a Gaussian kernel of
/// standard deviation `kernel_sigma`, truncated at +-3 sigma and renormalized
/// to unit sum. Symmetric.
class ConvolutionForward final : public LinearForward {
 public:
  ConvolutionForward(Index n, double kernel_sigma);

  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  Vector apply(const Vector& f) const override;
  Vector adjoint(const Vector& g) const override { return apply(g); }
  OperatorDescriptor descriptor() const override;

  /// Kernel weights for offsets -half_width ... half_width.
  const Vector& kernel() const { return kernel_; }
  Index half_width() const { return half_width_; }

 private:
  Index n_;
  double kernel_sigma_;
  Index half_width_;
  Vector kernel_;
};

/// Parallel-beam Radon transform of a square image covering [-1, 1]^2
/// (row-major, row 0 at the top). Angles are uniform in [0, pi), detector
/// offsets uniform in [-1, 1]. Each ray is sampled every half pixel with
/// bilinear interpolation; the sinogram is angle-major.
class RadonForward final : public LinearForward {
 public:
  RadonForward(Index side, Index n_angles, Index n_detectors);

  Index rows() const override { return n_angles_ * n_detectors_; }
  Index cols() const override { return side_ * side_; }
  Vector apply(const Vector& f) const override;
  Vector adjoint(const Vector& g) const override;
  OperatorDescriptor descriptor() const override;
  Matrix apply_columns(const Matrix& columns) const override;

  double angle(Index a) const;
  double detector(Index k) const;
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return matrix_; }

 private:
  Index side_;
  Index n_angles_;
  Index n_detectors_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
};

ForwardPtr inpainting_operator(Index n, std::vector<Interval> removed);
ForwardPtr convolution_operator(Index n, double kernel_sigma);
ForwardPtr radon_operator(Index image_side, Index n_angles, Index n_detectors);

/// Piecewise test signal on x_i = i / n with values in [0, 1]: a smooth bump
/// on [0, 0.35), a plateau at 0.2 up to a jump at 0.45, a plateau at 0.8 with
/// a corner at 0.6 followed by a linear ramp to 0.4 at 0.7, a plateau at 0.4
/// and a final jump to 0 at 0.85.
Vector phantom_1d(Index n);
double phantom_1d_value(double x);

/// Modified (Toft) Shepp-Logan phantom, 10 ellipses, rasterized at pixel
/// centers over [-1, 1]^2, row-major with row 0 at the top. Values in [0, 1].
Vector phantom_shepp_logan(Index side);

struct Observation {
  Vector y;
  double sigma = 0.0;
  /// ||epsilon||_2 / ||f_true||_2 actually realized.
  double realized_level = 0.0;
};

/// y = A f_true + epsilon with epsilon ~ N(0, sigma^2 I) and
/// sigma = relative_level * ||f_true|| / sqrt(m).
Observation make_data(const LinearForward& forward, const Vector& f_true, double relative_level,
                      std::uint64_t seed);

}  // namespace besov
