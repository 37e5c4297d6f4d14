#include "besov_rto/wavelet.hpp"

#include <array>
#include <cmath>
#include <string>

#include "besov_rto/errors.hpp"

namespace besov {
namespace {

// Daubechies scaling filters (synthesis low-pass, sum = sqrt(2)), db1 ... db10.
const std::array<std::vector<double>, 10> kDaubechiesFilters = {{
    {0.7071067811865476, 0.7071067811865476},
    {0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.12940952255126037},
    {0.33267055295008263, 0.8068915093110925, 0.45987750211849154, -0.13501102001025458,
     -0.08544127388202666, 0.03522629188570953},
    {0.2303778133088965, 0.7148465705529157, 0.6308807679298589, -0.027983769416859854,
     -0.18703481171909309, 0.030841381835560764, 0.0328830116668852, -0.010597401785069032},
    {0.16010239797419293, 0.6038292697971896, 0.7243085284377729, 0.13842814590132074,
     -0.24229488706638203, -0.032244869584638375, 0.07757149384004572, -0.006241490212798274,
     -0.012580751999081999, 0.0033357252854737712},
    {0.11154074335010947, 0.49462389039845306, 0.7511339080210954, 0.31525035170919763,
     -0.22626469396543983, -0.12976686756726194, 0.09750160558732304, 0.027522865530305727,
     -0.03158203931748603, 0.0005538422011614961, 0.004777257510945511,
     -0.0010773010853084796},
    {0.07785205408500918, 0.3965393194819173, 0.7291320908462351, 0.4697822874051931,
     -0.14390600392856498, -0.22403618499387498, 0.07130921926683026, 0.08061260915108308,
     -0.03802993693501441, -0.01657454163066688, 0.01255099855609984, 0.0004295779729213665,
     -0.0018016407040474908, 0.00035371379997452024},
    {0.05441584224310401, 0.31287159091429995, 0.6756307362972898, 0.5853546836542067,
     -0.015829105256349306, -0.2840155429615469, 0.0004724845739132828, 0.12874742662047847,
     -0.017369301001807547, -0.044088253930794755, 0.013981027917398282,
     0.008746094047405777, -0.004870352993451574, -0.00039174037337694705,
     0.0006754494064505693, -0.00011747678412476953},
    {0.038077947363878345, 0.24383467461259034, 0.6048231236901112, 0.6572880780513005,
     0.13319738582500756, -0.2932737832791749, -0.09684078322297646, 0.14854074933810638,
     0.03072568147933338, -0.06763282906132997, 0.00025094711483145197,
     0.022361662123679096, -0.004723204757751397, -0.00428150368246343,
     0.0018476468830562265, 0.00023038576352319597, -0.0002519631889427101,
     3.93473203162716e-05},
    {0.026670057900555554, 0.1881768000776915, 0.5272011889317256, 0.6884590394536035,
     0.2811723436605775, -0.24984642432731538, -0.19594627437737705, 0.12736934033579325,
     0.09305736460357235, -0.07139414716639708, -0.029457536821875813, 0.033212674059341,
     0.0036065535669561697, -0.010733175483330575, 0.001395351747052901,
     0.001992405295185056, -0.0006858566949597116, -0.00011646685512928545,
     9.358867032006959e-05, -1.3264202894521244e-05},
}};

Index pow2(Index e) { return Index{1} << e; }

}  // namespace

WaveletSpec WaveletSpec::daubechies(int moments) {
  if (moments < 1 || moments > static_cast<int>(kDaubechiesFilters.size())) {
    throw ParameterError("Daubechies wavelets are available for 1..10 vanishing moments, got " +
                         std::to_string(moments));
  }
  return {WaveletFamily::Daubechies, moments};
}

WaveletSpec WaveletSpec::parse(std::string_view name) {
  if (name == "haar") return haar();
  if (name.size() > 2 && name.substr(0, 2) == "db") {
    int moments = 0;
    for (char c : name.substr(2)) {
      if (c < '0' || c > '9') throw ParameterError("unknown wavelet: " + std::string(name));
      moments = moments * 10 + (c - '0');
      if (moments > 1000) break;
    }
    return daubechies(moments);
  }
  throw ParameterError("unknown wavelet: " + std::string(name));
}

std::string WaveletSpec::name() const {
  if (family == WaveletFamily::Haar) return "haar";
  return "db" + std::to_string(vanishing_moments);
}

const std::vector<double>& WaveletSpec::scaling_filter() const {
  if (family == WaveletFamily::Haar) return kDaubechiesFilters[0];
  return kDaubechiesFilters.at(static_cast<std::size_t>(vanishing_moments - 1));
}

// ---------------------------------------------------------------------------

CoefficientLayout::CoefficientLayout(int dimension, int levels)
    : dimension_(dimension), levels_(levels) {
  if (dimension != 1 && dimension != 2) {
    throw ParameterError("wavelet dimension must be 1 or 2");
  }
  if (levels < 0 || levels * dimension > 40) {
    throw ParameterError("decomposition depth out of range: " + std::to_string(levels));
  }
  size_ = pow2(static_cast<Index>(levels) * dimension);
}

Index CoefficientLayout::level_begin(int level) const {
  return pow2(static_cast<Index>(level) * dimension_);
}

Index CoefficientLayout::level_count(int level) const {
  return (pow2(dimension_) - 1) * pow2(static_cast<Index>(level) * dimension_);
}

Index CoefficientLayout::orientation_count(int level) const {
  return pow2(static_cast<Index>(level) * dimension_);
}

CoefficientIndex CoefficientLayout::locate(Index flat) const {
  if (flat < 0 || flat >= size_) throw LayoutError("coefficient index out of range");
  if (flat == 0) return {};
  int level = 0;
  while (level_begin(level + 1) <= flat) ++level;
  const Index offset = flat - level_begin(level);
  const Index per = orientation_count(level);
  return {level, static_cast<int>(offset / per) + 1, offset % per};
}

Index CoefficientLayout::flat_index(const CoefficientIndex& where) const {
  if (where.level < 0) return 0;
  if (where.level >= levels_ || where.orientation < 1 ||
      where.orientation >= (1 << dimension_) || where.position < 0 ||
      where.position >= orientation_count(where.level)) {
    throw LayoutError("coefficient position outside the layout");
  }
  return level_begin(where.level) + (where.orientation - 1) * orientation_count(where.level) +
         where.position;
}

// ---------------------------------------------------------------------------

WaveletSystem::WaveletSystem(WaveletSpec spec, int dimension, int levels)
    : spec_(spec), layout_(dimension, levels), low_(spec.scaling_filter()) {
  const std::size_t taps = low_.size();
  high_.resize(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    high_[i] = sign * low_[taps - 1 - i];
  }
}

WaveletSystem WaveletSystem::for_size(WaveletSpec spec, int dimension, Index total_size) {
  if (dimension != 1 && dimension != 2) throw ParameterError("wavelet dimension must be 1 or 2");
  if (total_size < 1 || (total_size & (total_size - 1)) != 0) {
    throw DimensionError("signal size " + std::to_string(total_size) +
                         " is not a power of two");
  }
  int exponent = 0;
  while ((Index{1} << exponent) < total_size) ++exponent;
  if (exponent % dimension != 0) {
    throw DimensionError("2D signal size " + std::to_string(total_size) +
                         " is not a square dyadic image");
  }
  return WaveletSystem(spec, dimension, exponent / dimension);
}

void WaveletSystem::analyze(const double* in, Index length, Index stride, double* approx,
                            double* detail) const {
  const Index taps = static_cast<Index>(low_.size());
  const Index half = length / 2;
  for (Index k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (Index i = 0; i < taps; ++i) {
      const double x = in[((2 * k + i) % length) * stride];
      a += low_[static_cast<std::size_t>(i)] * x;
      d += high_[static_cast<std::size_t>(i)] * x;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

void WaveletSystem::synthesize(const double* approx, const double* detail, Index length,
                               double* out, Index stride) const {
  const Index taps = static_cast<Index>(low_.size());
  const Index half = length / 2;
  for (Index k = 0; k < length; ++k) out[k * stride] = 0.0;
  for (Index k = 0; k < half; ++k) {
    for (Index i = 0; i < taps; ++i) {
      out[((2 * k + i) % length) * stride] += low_[static_cast<std::size_t>(i)] * approx[k] +
                                              high_[static_cast<std::size_t>(i)] * detail[k];
    }
  }
}

Vector WaveletSystem::forward(const Vector& signal) const {
  if (signal.size() != size()) {
    throw DimensionError("signal has " + std::to_string(signal.size()) + " samples, expected " +
                         std::to_string(size()));
  }
  Vector out(size());
  std::vector<double> work(signal.data(), signal.data() + signal.size());
  const int levels = layout_.levels();

  if (dimension() == 1) {
    std::vector<double> approx(static_cast<std::size_t>(size()));
    for (int j = levels - 1; j >= 0; --j) {
      const Index length = pow2(j + 1);
      analyze(work.data(), length, 1, approx.data(), out.data() + layout_.level_begin(j));
      std::copy_n(approx.data(), length / 2, work.data());
    }
    out[0] = work[0];
    return out;
  }

  // 2D: `work` holds the current approximation block (row-major, side L).
  std::vector<double> rows(static_cast<std::size_t>(size()));
  std::vector<double> next(static_cast<std::size_t>(size()));
  std::vector<double> column_lo(static_cast<std::size_t>(side()));
  std::vector<double> column_hi(static_cast<std::size_t>(side()));
  for (int j = levels - 1; j >= 0; --j) {
    const Index length = pow2(j + 1);
    const Index half = length / 2;
    for (Index r = 0; r < length; ++r) {
      analyze(work.data() + r * length, length, 1, rows.data() + r * length,
              rows.data() + r * length + half);
    }
    const Index per = layout_.orientation_count(j);
    double* horizontal = out.data() + layout_.level_begin(j);
    double* vertical = horizontal + per;
    double* diagonal = vertical + per;
    for (Index c = 0; c < length; ++c) {
      analyze(rows.data() + c, length, length, column_lo.data(), column_hi.data());
      for (Index r = 0; r < half; ++r) {
        if (c < half) {
          next[static_cast<std::size_t>(r * half + c)] = column_lo[static_cast<std::size_t>(r)];
          horizontal[r * half + c] = column_hi[static_cast<std::size_t>(r)];
        } else {
          vertical[r * half + (c - half)] = column_lo[static_cast<std::size_t>(r)];
          diagonal[r * half + (c - half)] = column_hi[static_cast<std::size_t>(r)];
        }
      }
    }
    std::copy_n(next.data(), half * half, work.data());
  }
  out[0] = work[0];
  return out;
}

Vector WaveletSystem::inverse(const Vector& coefficients) const {
  if (coefficients.size() != size()) {
    throw LayoutError("coefficient vector has " + std::to_string(coefficients.size()) +
                      " entries, layout expects " + std::to_string(size()));
  }
  const int levels = layout_.levels();
  std::vector<double> work(static_cast<std::size_t>(size()));
  work[0] = coefficients[0];

  if (dimension() == 1) {
    std::vector<double> approx(static_cast<std::size_t>(size()));
    for (int j = 0; j < levels; ++j) {
      const Index length = pow2(j + 1);
      std::copy_n(work.data(), length / 2, approx.data());
      synthesize(approx.data(), coefficients.data() + layout_.level_begin(j), length,
                 work.data(), 1);
    }
    return Eigen::Map<const Vector>(work.data(), size());
  }

  std::vector<double> rows(static_cast<std::size_t>(size()));
  std::vector<double> column_lo(static_cast<std::size_t>(side()));
  std::vector<double> column_hi(static_cast<std::size_t>(side()));
  std::vector<double> column(static_cast<std::size_t>(side()));
  for (int j = 0; j < levels; ++j) {
    const Index length = pow2(j + 1);
    const Index half = length / 2;
    const Index per = layout_.orientation_count(j);
    const double* horizontal = coefficients.data() + layout_.level_begin(j);
    const double* vertical = horizontal + per;
    const double* diagonal = vertical + per;
    // Undo the column transform into `rows` (row-major, side L).
    for (Index c = 0; c < length; ++c) {
      for (Index r = 0; r < half; ++r) {
        if (c < half) {
          column_lo[static_cast<std::size_t>(r)] = work[static_cast<std::size_t>(r * half + c)];
          column_hi[static_cast<std::size_t>(r)] = horizontal[r * half + c];
        } else {
          column_lo[static_cast<std::size_t>(r)] = vertical[r * half + (c - half)];
          column_hi[static_cast<std::size_t>(r)] = diagonal[r * half + (c - half)];
        }
      }
      synthesize(column_lo.data(), column_hi.data(), length, rows.data() + c, length);
    }
    for (Index r = 0; r < length; ++r) {
      synthesize(rows.data() + r * length, rows.data() + r * length + half, length,
                 work.data() + r * length, 1);
    }
  }
  return Eigen::Map<const Vector>(work.data(), size());
}

Matrix WaveletSystem::dense_matrix() const {
  if (size() > 4096) throw DimensionError("dense wavelet matrix requested for a large system");
  Matrix w(size(), size());
  Vector unit = Vector::Zero(size());
  for (Index i = 0; i < size(); ++i) {
    unit[i] = 1.0;
    w.col(i) = forward(unit);
    unit[i] = 0.0;
  }
  return w;
}

// ---------------------------------------------------------------------------

BesovWeights besov_weights(double s, double p, int dimension, int levels) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("Besov parameter p must be >= 1");
  if (!std::isfinite(s)) throw ParameterError("Besov smoothness s must be finite");
  const CoefficientLayout layout(dimension, levels);
  BesovWeights weights;
  weights.kappa = s + dimension / 2.0 - dimension / p;
  weights.diagonal.resize(layout.size());
  weights.diagonal[0] = 1.0;
  for (int j = 0; j < levels; ++j) {
    weights.diagonal.segment(layout.level_begin(j), layout.level_count(j))
        .setConstant(std::exp2(j * weights.kappa));
  }
  return weights;
}

BesovTransform::BesovTransform(WaveletSystem wavelet, BesovWeights weights)
    : wavelet_(std::move(wavelet)), weights_(std::move(weights)) {
  if (weights_.diagonal.size() != wavelet_.size()) {
    throw DimensionError("Besov weights and wavelet system disagree on size");
  }
  if ((weights_.diagonal.array() <= 0.0).any()) {
    throw ParameterError("Besov weights must be strictly positive");
  }
}

Vector BesovTransform::apply(const Vector& f) const {
  return weights_.diagonal.cwiseProduct(wavelet_.forward(f));
}

Vector BesovTransform::apply_inverse(const Vector& z) const {
  if (z.size() != size()) throw DimensionError("vector size does not match B");
  return wavelet_.inverse(z.cwiseQuotient(weights_.diagonal));
}

}  // namespace besov
