#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace besov {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class WaveletFamily { Haar, Daubechies };

/// Names an orthonormal wavelet: Haar, or Daubechies with a given number of
/// vanishing moments ("db8" has 8 vanishing moments and a 16-tap filter).
struct WaveletSpec {
  WaveletFamily family = WaveletFamily::Haar;
  int vanishing_moments = 1;

  static WaveletSpec haar() { return {WaveletFamily::Haar, 1}; }
  static WaveletSpec daubechies(int moments);
  /// Accepts "haar" and "db1" ... "db10".
  static WaveletSpec parse(std::string_view name);

  std::string name() const;
  /// Scaling (low-pass) synthesis filter, standard published coefficients.
  const std::vector<double>& scaling_filter() const;

  friend bool operator==(const WaveletSpec&, const WaveletSpec&) = default;
};

/// Position of a flat coefficient in the canonical layout. The scaling
/// coefficient has level -1 and orientation 0; wavelet orientations run from
/// 1 to 2^d - 1 (2D: 1 horizontal, 2 vertical, 3 diagonal).
struct CoefficientIndex {
  int level = -1;
  int orientation = 0;
  Index position = 0;

  friend bool operator==(const CoefficientIndex&, const CoefficientIndex&) = default;
};

/// Canonical ordering of a fully decomposed coefficient vector: index 0 holds
/// the scaling coefficient, level j occupies [2^{jd}, 2^{(j+1)d}) and inside a
/// 2D level the orientations follow each other, each raster-ordered in k.
class CoefficientLayout {
 public:
  CoefficientLayout(int dimension, int levels);

  int dimension() const { return dimension_; }
  int levels() const { return levels_; }
  Index size() const { return size_; }
  /// Samples per axis, 2^levels.
  Index side() const { return Index{1} << levels_; }

  Index level_begin(int level) const;
  Index level_count(int level) const;
  /// Coefficients of a single orientation at `level`: 2^{jd}.
  Index orientation_count(int level) const;

  CoefficientIndex locate(Index flat) const;
  Index flat_index(const CoefficientIndex& where) const;

 private:
  int dimension_;
  int levels_;
  Index size_;
};

/// Periodic orthonormal discrete wavelet transform on a dyadic 1D signal or a
/// square 2D image (row-major), decomposed down to a single scaling
/// coefficient. Immutable after construction.
class WaveletSystem {
 public:
  WaveletSystem(WaveletSpec spec, int dimension, int levels);

  /// Builds the system for a signal with `total_size` samples; throws
  /// DimensionError unless the size is 2^{J d}.
  static WaveletSystem for_size(WaveletSpec spec, int dimension, Index total_size);

  const WaveletSpec& spec() const { return spec_; }
  const CoefficientLayout& layout() const { return layout_; }
  int dimension() const { return layout_.dimension(); }
  int levels() const { return layout_.levels(); }
  Index size() const { return layout_.size(); }
  Index side() const { return layout_.side(); }

  /// delta = W f.
  Vector forward(const Vector& signal) const;
  /// f = W^T delta.
  Vector inverse(const Vector& coefficients) const;

  /// Dense W assembled column by column from the fast transform. Only meant
  /// for small systems (n <= 64) used as test oracles.
  Matrix dense_matrix() const;

 private:
  void analyze(const double* in, Index length, Index stride, double* approx, double* detail) const;
  void synthesize(const double* approx, const double* detail, Index length, double* out,
                  Index stride) const;

  WaveletSpec spec_;
  CoefficientLayout layout_;
  std::vector<double> low_;
  std::vector<double> high_;
};

/// Diagonal Besov weights S with kappa = s + d/2 - d/p.
struct BesovWeights {
  Vector diagonal;
  double kappa = 0.0;
};

BesovWeights besov_weights(double s, double p, int dimension, int levels);

/// The combined operator B = S W and its inverse W^T S^{-1}.
class BesovTransform {
 public:
  BesovTransform(WaveletSystem wavelet, BesovWeights weights);

  const WaveletSystem& wavelet() const { return wavelet_; }
  const BesovWeights& weights() const { return weights_; }
  Index size() const { return wavelet_.size(); }

  Vector apply(const Vector& f) const;
  Vector apply_inverse(const Vector& z) const;

 private:
  WaveletSystem wavelet_;
  BesovWeights weights_;
};

}  // namespace besov
