// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code is
// nonzero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "besov_rto/besov_prior.hpp"
#include "besov_rto/diagnostics.hpp"
#include "besov_rto/forward_models.hpp"
#include "besov_rto/gen_gaussian.hpp"
#include "besov_rto/rto_sampler.hpp"
#include "besov_rto/runner.hpp"
#include "besov_rto/wavelet.hpp"

namespace fs = std::filesystem;
using namespace besov;

namespace {

// Tolerances.
constexpr double kStandardErrors = 3.0;
constexpr double kCovarianceFrobenius = 0.05;
constexpr double kToyMeanRelative = 0.02;
constexpr double kToyTotalVariation = 0.05;
constexpr int kToyAccepted = 20000;
constexpr double kAcceptanceLow = 0.35;
constexpr double kAcceptanceHigh = 0.60;
constexpr double kSweepRelative = 0.05;
constexpr int kSweepAccepted = 1000;
constexpr double kMedianEssFraction = 0.2;
constexpr double kOrthonormality = 1e-10;
constexpr double kNormAgreement = 1e-12;
constexpr double kIdentity = 1e-9;
constexpr double kLaplace = 1e-9;
constexpr double kDerivative = 1e-6;
constexpr double kCtAcceptance = 0.01;
constexpr double kCtError = 0.5;
constexpr double kNearZero = 1e-3;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector normal_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

double relative_l2(const Vector& a, const Vector& b) { return (a - b).norm() / b.norm(); }

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  return nlohmann::json::parse(in);
}

// Linear-Gaussian case: RTO proposals are exact posterior draws.
void criterion_1(Outcome& out, const fs::path&) {
  const Index n = 16;
  const BesovPrior prior(WaveletSpec::haar(), 1, 4, 1.0, 2.0, 1.0);
  const ForwardPtr forward = convolution_operator(n, 0.05);
  const Observation obs = make_data(*forward, phantom_1d(n), 0.02, 11);
  const Posterior post(prior, forward, obs.y, obs.sigma);

  RtoConfig config;
  config.n_samples = 5000;
  config.seed = 1;
  const ChainResult chain = RtoSampler(post, config).run_chain();

  // f = W^T S^{-1} h with h ~ N(0, I): prior covariance C = W^T S^{-2} W.
  const Matrix w = prior.wavelet().dense_matrix();
  const Vector inv_weights = prior.weights().diagonal.cwiseInverse();
  const Matrix root = w.transpose() * inv_weights.asDiagonal();
  const Matrix prior_cov = root * root.transpose();
  const Matrix a = forward->dense();
  const double inv_var = 1.0 / (obs.sigma * obs.sigma);
  const Matrix precision = inv_var * a.transpose() * a + prior_cov.inverse();
  const Matrix cov = precision.inverse();
  const Vector mean = cov * (inv_var * a.transpose() * obs.y);

  const Matrix& f = chain.f_samples;
  const double count = static_cast<double>(f.cols());
  const Vector sample_mean = f.rowwise().mean();
  const Matrix centered = f.colwise() - sample_mean;
  const Matrix sample_cov = centered * centered.transpose() / (count - 1.0);

  double worst_z = 0.0;
  for (Index i = 0; i < n; ++i) {
    worst_z = std::max(worst_z, std::abs(sample_mean[i] - mean[i]) / std::sqrt(cov(i, i) / count));
  }
  const double cov_error = (sample_cov - cov).norm() / cov.norm();
  out.detail << "acceptance " << chain.acceptance_rate << ", max |mean z| " << worst_z
             << ", covariance Frobenius error " << cov_error;
  out.check(chain.acceptance_rate == 1.0, "acceptance rate 1");
  out.check(worst_z <= kStandardErrors, "mean within 3 SE");
  out.check(cov_error < kCovarianceFrobenius, "covariance error < 5%");
}

// Bins touched by node i and the node's trapezoid weight within each: edge
// nodes count half in each neighbouring bin.
std::vector<std::pair<int, double>> node_bins(int i, int per_bin, int bins) {
  if (i % per_bin != 0) return {{i / per_bin, 1.0}};
  std::vector<std::pair<int, double>> out;
  if (i > 0) out.emplace_back(i / per_bin - 1, 0.5);
  if (i / per_bin < bins) out.emplace_back(i / per_bin, 0.5);
  return out;
}

// n = 2 toy against tensor-grid quadrature of the transformed posterior.
void criterion_2(Outcome& out, const fs::path&) {
  const BesovPrior prior(WaveletSpec::haar(), 1, 1, 1.0, 1.5, 1.0);
  const Matrix a = (Matrix(2, 2) << 1.0, 0.4, 0.3, 0.8).finished();
  const Vector f_true = (Vector(2) << 0.8, -0.5).finished();
  const double sigma = 0.2;
  const Vector y = a * f_true + (Vector(2) << 0.05, -0.03).finished();
  const Posterior post(prior, std::make_shared<DenseForward>(a), y, sigma);

  RtoConfig config;
  config.n_samples = 40000;
  config.seed = 2;
  const ChainResult chain = RtoSampler(post, config).run_chain();

  // 401^2 nodes on [-6, 6]^2; 40 x 40 bins of 10 node spacings each, so
  // integrating the trapezoid rule per bin splits the shared edge nodes.
  const int nodes = 401;
  const int bins = 40;
  const int per_bin = (nodes - 1) / bins;
  const double lo = -6.0;
  const double step = 12.0 / (nodes - 1);
  std::vector<double> log_density(nodes * nodes);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes; ++i) {
    for (int k = 0; k < nodes; ++k) {
      const Vector h = (Vector(2) << lo + i * step, lo + k * step).finished();
      log_density[i * nodes + k] = post.log_posterior_h(h);
      peak = std::max(peak, log_density[i * nodes + k]);
    }
  }
  Matrix bin_mass = Matrix::Zero(bins, bins);
  Vector weighted_f = Vector::Zero(2);
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    for (int k = 0; k < nodes; ++k) {
      const double density = std::exp(log_density[i * nodes + k] - peak);
      const Vector h = (Vector(2) << lo + i * step, lo + k * step).finished();
      const double wi = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
      const double wk = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
      total += wi * wk * density;
      weighted_f += wi * wk * density * prior.transform().apply(h);
      for (const auto& [bi, ci] : node_bins(i, per_bin, bins)) {
        for (const auto& [bk, ck] : node_bins(k, per_bin, bins)) bin_mass(bi, bk) += ci * ck * density;
      }
    }
  }
  const Vector quadrature_mean = weighted_f / total;
  bin_mass /= bin_mass.sum();

  Matrix counts = Matrix::Zero(bins, bins);
  double outside = 0.0;
  for (Index c = 0; c < chain.h_samples.cols(); ++c) {
    const int bi = static_cast<int>(std::floor((chain.h_samples(0, c) - lo) / (per_bin * step)));
    const int bk = static_cast<int>(std::floor((chain.h_samples(1, c) - lo) / (per_bin * step)));
    if (bi < 0 || bi >= bins || bk < 0 || bk >= bins) {
      outside += 1.0;
    } else {
      counts(bi, bk) += 1.0;
    }
  }
  const double count = static_cast<double>(chain.h_samples.cols());
  const double tv = 0.5 * ((counts / count - bin_mass).cwiseAbs().sum() + outside / count);
  const Vector chain_mean = chain.f_samples.rowwise().mean();
  const double mean_error =
      (chain_mean - quadrature_mean).cwiseQuotient(quadrature_mean).cwiseAbs().maxCoeff();

  out.detail << "accepted " << chain.accepted_count << " of " << config.n_samples
             << ", max relative mean error " << mean_error << ", histogram TV " << tv;
  out.check(chain.accepted_count >= kToyAccepted, "at least 2e4 accepted");
  out.check(mean_error < kToyMeanRelative, "mean within 2%");
  out.check(tv < kToyTotalVariation, "TV < 0.05");
}

RunConfig inpainting_config(Index n, const std::string& wavelet, int proposals,
                            const fs::path& dir) {
  RunConfig c;
  c.problem = ProblemKind::Inpainting;
  c.n = n;
  c.wavelet = wavelet;
  c.s = 1.2;
  c.p = 1.5;
  c.lambda = 0.025;
  c.relative_noise = 0.02;
  c.n_samples = proposals;
  c.seed = 3;
  c.output_dir = (dir / (wavelet + "_n" + std::to_string(n))).string();
  return c;
}

void criterion_3(Outcome& out, const fs::path& dir) {
  const auto in_band = [](double rate) { return rate >= kAcceptanceLow && rate <= kAcceptanceHigh; };
  for (const std::string wavelet : {"db8", "haar"}) {
    const auto start = Clock::now();
    const double small =
        run_experiment(inpainting_config(128, wavelet, 2000, dir)).chain.acceptance_rate;
    const double small_seconds = seconds_since(start);
    const double full =
        run_experiment(inpainting_config(512, wavelet, 10000, dir)).chain.acceptance_rate;
    out.detail << wavelet << ": n=512 " << full << ", n=128 " << small << " (" << small_seconds
               << " s); ";
    out.check(in_band(full), wavelet + " n=512 acceptance in [0.35, 0.60]");
    out.check(in_band(small), wavelet + " n=128 acceptance in [0.35, 0.60]");
    out.check(small_seconds < 300.0, wavelet + " n=128 under 5 min");
  }
}

RunConfig sweep_config(const fs::path& dir) {
  RunConfig c;
  c.problem = ProblemKind::Deconvolution;
  c.wavelet = "haar";
  c.s = 1.0;
  c.p = 1.5;
  c.lambda = 1.0;
  c.n_samples = 3000;
  c.seed = 4;
  c.output_dir = (dir / "sweep").string();
  return c;
}

const std::vector<Index> kSweepSizes = {64, 128};

void criterion_4(Outcome& out, const fs::path& dir) {
  const SweepResult sweep = discretization_sweep(sweep_config(dir), kSweepSizes);
  const double difference = sweep.differences(0, 1);
  out.detail << "relative L2 difference " << difference;
  for (Index n : kSweepSizes) {
    const auto manifest = read_json(dir / "sweep" / ("n" + std::to_string(n)) / "manifest.json");
    const int accepted = manifest.at("accepted_count").get<int>();
    out.detail << ", accepted n=" << n << " " << accepted;
    out.check(accepted >= kSweepAccepted, "at least 1000 accepted at n=" + std::to_string(n));
  }
  out.check(difference < kSweepRelative, "means within 5%");
}

void criterion_5(Outcome& out, const fs::path& dir) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> iid(10000);
  for (double& v : iid) v = normal(rng);
  const double iid_ratio = ess(iid) / static_cast<double>(iid.size());

  const double phi = 0.5;
  std::vector<double> ar(100000);
  ar[0] = normal(rng) / std::sqrt(1.0 - phi * phi);
  for (std::size_t i = 1; i < ar.size(); ++i) ar[i] = phi * ar[i - 1] + normal(rng);
  const double ar_ratio = ess(ar) / static_cast<double>(ar.size());
  const double ar_expected = (1.0 - phi) / (1.0 + phi);

  out.detail << "iid ESS/N " << iid_ratio << ", AR(1) ESS/N " << ar_ratio;
  out.check(iid_ratio >= 0.8 && iid_ratio <= 1.2, "iid ESS/N in [0.8, 1.2]");
  out.check(std::abs(ar_ratio - ar_expected) <= 0.15 * ar_expected, "AR(1) ESS/N within 15%");

  // Reuses the criterion 4 runs; they are deterministic, so rerunning is
  // equivalent when they are missing.
  bool present = true;
  for (Index n : kSweepSizes) {
    present = present && fs::exists(dir / "sweep" / ("n" + std::to_string(n)) / "manifest.json");
  }
  if (!present) discretization_sweep(sweep_config(dir), kSweepSizes);
  for (Index n : kSweepSizes) {
    const fs::path run = dir / "sweep" / ("n" + std::to_string(n));
    const ChainStats stats = diagnose(run);
    out.detail << ", n=" << n << " ESS min/median/max " << stats.ess_min << "/" << stats.ess_median
               << "/" << stats.ess_max << " of " << stats.accepted_count << " accepted";
    out.check(stats.ess_min <= stats.ess_median && stats.ess_median <= stats.ess_max,
              "ESS ordering at n=" + std::to_string(n));
    out.check(stats.ess_median > kMedianEssFraction * stats.accepted_count,
              "median ESS > 0.2 accepted at n=" + std::to_string(n));
  }
}

void criterion_6(Outcome& out, const fs::path&) {
  double worst = 0.0;
  for (const WaveletSpec& spec : {WaveletSpec::haar(), WaveletSpec::daubechies(8)}) {
    for (const auto& [dimension, levels] : std::vector<std::pair<int, int>>{{1, 6}, {2, 3}}) {
      const Matrix w = WaveletSystem(spec, dimension, levels).dense_matrix();
      worst = std::max(worst, (w.transpose() * w - Matrix::Identity(w.rows(), w.cols()))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  out.detail << "max |W^T W - I| " << worst;
  out.check(worst <= kOrthonormality, "orthonormality");

  const Vector weights = besov_weights(1.0, 2.0, 1, 3).diagonal;
  const Vector expected = (Vector(8) << 1, 1, 2, 2, 4, 4, 4, 4).finished();
  out.detail << ", weight error " << (weights - expected).cwiseAbs().maxCoeff();
  out.check(weights == expected, "weights [1,1,2,2,4,4,4,4]");

  // Direct summation: weight 2^{j kappa} per layout level on dense W f.
  double norm_error = 0.0;
  std::mt19937_64 rng(6);
  for (const auto& [dimension, levels] : std::vector<std::pair<int, int>>{{1, 6}, {2, 3}}) {
    const double s = 1.3;
    const double p = 1.4;
    const BesovPrior prior(WaveletSpec::daubechies(4), dimension, levels, s, p, 1.0);
    const double kappa = s + dimension / 2.0 - dimension / p;
    const Matrix w = prior.wavelet().dense_matrix();
    const CoefficientLayout& layout = prior.wavelet().layout();
    for (int trial = 0; trial < 5; ++trial) {
      const Vector f = normal_vector(prior.size(), rng);
      const Vector delta = w * f;
      double sum = 0.0;
      for (Index i = 0; i < delta.size(); ++i) {
        const int level = layout.locate(i).level;
        const double weight = level < 0 ? 1.0 : std::pow(2.0, level * kappa);
        sum += std::pow(std::abs(weight * delta[i]), p);
      }
      const double direct = std::pow(sum, 1.0 / p);
      norm_error = std::max(norm_error, std::abs(prior.norm(f) - direct) / direct);
    }
  }
  out.detail << ", norm relative error " << norm_error;
  out.check(norm_error <= kNormAgreement, "norm agreement");
}

void criterion_7(Outcome& out, const fs::path&) {
  const GenGaussian gaussian(2.0, 1.0);
  double identity_error = 0.0;
  for (int i = 0; i <= 1200; ++i) {
    const double h = -6.0 + 0.01 * i;
    identity_error = std::max(identity_error, std::abs(g1d(h, gaussian) - h));
  }
  out.detail << "p=2 identity error " << identity_error;
  out.check(identity_error <= kIdentity, "g1d identity at p=2");

  // Laplace with unit variance: scale 1/sqrt 2, F^{-1}(u) = -b sign(u - 1/2) log(1 - 2|u - 1/2|).
  const GenGaussian laplace(1.0, 1.0);
  const double b = 1.0 / std::numbers::sqrt2;
  double laplace_error = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double u = i / 1000.0;
    const double exact = -b * (u < 0.5 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u - 0.5));
    laplace_error =
        std::max(laplace_error, std::abs(laplace.quantile(u) - exact) / std::max(1.0, std::abs(exact)));
  }
  out.detail << ", Laplace quantile error " << laplace_error;
  out.check(laplace_error <= kLaplace, "Laplace quantile");

  // Variance 1 at lambda = 1; fourth moment Gamma(5/p) Gamma(1/p) / Gamma(3/p)^2.
  const double p = 1.5;
  const GenGaussian gg(p, 1.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const int draws = 100000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = g1d(normal(rng), gg);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / draws;
  const double variance = (sum_sq - draws * mean * mean) / (draws - 1);
  using boost::math::tgamma;
  const double kurtosis = tgamma(5.0 / p) * tgamma(1.0 / p) / std::pow(tgamma(3.0 / p), 2);
  const double se = std::sqrt((kurtosis - 1.0) / draws);
  out.detail << ", variance " << variance << " (SE " << se << ")";
  out.check(std::abs(variance - 1.0) <= kStandardErrors * se, "pushed-forward variance");

  double derivative_error = 0.0;
  for (double shape : {1.0, 1.2, 1.5, 2.0, 3.0}) {
    const GenGaussian g(shape, 0.7);
    for (int i = 0; i <= 120; ++i) {
      const double h = -6.0 + 0.1 * i;
      // g'' jumps at h = 0 for p < 2, where central differences are only
      // first-order accurate.
      const double step = 1e-6;
      const double fd = (g1d(h + step, g) - g1d(h - step, g)) / (2.0 * step);
      derivative_error = std::max(derivative_error, std::abs(g1d_deriv(h, g) - fd) / std::abs(fd));
    }
  }
  out.detail << ", derivative relative error " << derivative_error;
  out.check(derivative_error <= kDerivative, "g1d_deriv vs finite differences");
}

RunConfig ct_config(double s, const fs::path& dir) {
  RunConfig c;
  c.problem = ProblemKind::Ct;
  c.n = 32;
  c.n_angles = 15;
  c.n_detectors = 45;
  c.wavelet = "haar";
  c.s = s;
  c.p = 1.5;
  c.lambda = 0.025;
  c.n_samples = 5000;
  c.seed = 8;
  c.initial_state = InitialState::FirstProposal;
  std::ostringstream name;
  name << "ct_s" << s;
  c.output_dir = (dir / name.str()).string();
  return c;
}

// Fraction of |w| < 1e-3 max|w| per level, over the final-state sample's
// detail coefficients.
std::vector<double> near_zero_fractions(const fs::path& run, int levels) {
  std::vector<std::vector<double>> values(static_cast<std::size_t>(levels));
  double largest = 0.0;
  for (int j = 0; j < levels; ++j) {
    for (int orientation = 1; orientation <= 3; ++orientation) {
      std::ifstream in(run / ("coeff_level" + std::to_string(j) + "_or" +
                              std::to_string(orientation) + ".csv"));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        const double value = std::stod(line.substr(line.rfind(',') + 1));
        values[static_cast<std::size_t>(j)].push_back(value);
        largest = std::max(largest, std::abs(value));
      }
    }
  }
  std::vector<double> fractions;
  for (const auto& level : values) {
    const auto small = std::count_if(level.begin(), level.end(),
                                     [&](double v) { return std::abs(v) < kNearZero * largest; });
    fractions.push_back(static_cast<double>(small) / static_cast<double>(level.size()));
  }
  return fractions;
}

void criterion_8(Outcome& out, const fs::path& dir) {
  const RunConfig rough = ct_config(1.0, dir);
  const RunSummary summary = run_experiment(rough);
  const Vector truth = build_problem(rough).truth;
  const double error = relative_l2(summary.stats.mean, truth);
  out.detail << "acceptance " << summary.chain.acceptance_rate << ", mean relative L2 error "
             << error;
  out.check(summary.chain.acceptance_rate > kCtAcceptance, "acceptance > 0.01");
  out.check(error < kCtError, "relative error < 0.5");

  const RunConfig smooth = ct_config(2.5, dir);
  const RunSummary smooth_summary = run_experiment(smooth);
  const int levels = 5;
  const auto rough_fractions = near_zero_fractions(rough.output_dir, levels);
  const auto smooth_fractions = near_zero_fractions(smooth.output_dir, levels);
  out.detail << ", s=2.5 acceptance " << smooth_summary.chain.acceptance_rate
             << ", near-zero fractions by level (s=1 | s=2.5):";
  bool increasing = true;
  bool sparser = true;
  for (int j = 0; j < levels; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    out.detail << " " << rough_fractions[jj] << "|" << smooth_fractions[jj];
    if (j > 0) increasing = increasing && smooth_fractions[jj] > smooth_fractions[jj - 1];
    sparser = sparser && smooth_fractions[jj] >= rough_fractions[jj];
  }
  sparser = sparser && smooth_fractions.back() > rough_fractions.back();
  out.check(increasing, "s=2.5 near-zero fraction strictly increasing in level");
  out.check(sparser, "s=2.5 at least as sparse as s=1 per level, strictly at the finest");
}

struct Criterion {
  void (*run)(Outcome&, const fs::path&);
  double limit_seconds;
};

const std::map<int, Criterion> kCriteria = {
    {1, {criterion_1, 30.0}},  {2, {criterion_2, 120.0}}, {3, {criterion_3, 0.0}},
    {4, {criterion_4, 600.0}}, {5, {criterion_5, 0.0}},   {6, {criterion_6, 10.0}},
    {7, {criterion_7, 30.0}},  {8, {criterion_8, 1200.0}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  std::string work_dir = (fs::temp_directory_path() / "besov-rto-acceptance").string();
  app.add_option("--criterion", selected, "criteria to run (default: all)")
      ->check(CLI::Range(1, 8));
  app.add_option("--work-dir", work_dir, "directory for run outputs");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) {
    for (const auto& [id, criterion] : kCriteria) selected.push_back(id);
  }

  bool all_pass = true;
  for (int id : selected) {
    const Criterion& criterion = kCriteria.at(id);
    const fs::path dir = fs::path(work_dir) / ("criterion" + std::to_string(id));
    // Criterion 5 reads the criterion 4 runs.
    const fs::path run_dir = id == 5 ? fs::path(work_dir) / "criterion4" : dir;
    fs::create_directories(run_dir);
    Outcome outcome;
    const auto start = Clock::now();
    try {
      criterion.run(outcome, run_dir);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << " [error: " << e.what() << "]";
    }
    const double seconds = seconds_since(start);
    if (criterion.limit_seconds > 0.0 && seconds >= criterion.limit_seconds) {
      outcome.check(false, "runtime limit " + std::to_string(criterion.limit_seconds) + " s");
    }
    std::cout << "criterion " << id << ": " << (outcome.pass ? "PASS" : "FAIL") << " ("
              << seconds << " s) " << outcome.detail.str() << std::endl;
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
