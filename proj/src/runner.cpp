#include "besov_rto/runner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "besov_rto/errors.hpp"
#include "besov_rto/rng.hpp"

#ifndef BESOV_RTO_VERSION
#define BESOV_RTO_VERSION "0.0.0"
#endif
#ifndef BESOV_RTO_REVISION
#define BESOV_RTO_REVISION "unknown"
#endif

namespace besov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDataStream = std::numeric_limits<std::uint64_t>::max() - 1;
constexpr int kMaxAcfLag = 100;

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(Index n) {
  int levels = 0;
  while ((Index{1} << levels) < n) ++levels;
  return levels;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Tracks the files of one run so a failed run can be undone.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      std::error_code ec;
      fs::create_directories(dir_, ec);
      if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
      created_ = true;
    } else if (!fs::is_directory(dir_)) {
      throw ConfigError("output path " + dir_.string() + " is not a directory");
    }
  }

  const fs::path& dir() const { return dir_; }

  std::ofstream open(const std::string& name, bool binary = false) {
    const fs::path path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
  }

  void write_text(const std::string& name, const std::string& text) {
    auto out = open(name);
    out << text;
    if (!out) throw ConfigError("failed writing " + (dir_ / name).string());
  }

  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& path : written_) fs::remove(path, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool created_ = false;
};

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t swapped = 0;
    for (int b = 0; b < 8; ++b) swapped |= ((bits >> (8 * b)) & 0xffULL) << (8 * (7 - b));
    return swapped;
  }
  return bits;
}

void write_samples(OutputSet& out, const std::string& name, const Matrix& samples) {
  auto file = out.open(name, true);
  std::vector<char> buffer(static_cast<std::size_t>(samples.size()) * 8);
  for (Index i = 0; i < samples.size(); ++i) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(samples.data()[i]));
    std::memcpy(buffer.data() + 8 * i, &bits, 8);
  }
  file.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!file) throw ConfigError("failed writing " + (out.dir() / name).string());
}

// One value per grid point; 1D files carry the physical position, CT files
// the pixel row and column.
std::string field_csv(const RunConfig& config, const Vector& values) {
  std::ostringstream csv;
  if (config.dimension() == 1) {
    csv << "index,x,value\n";
    for (Index i = 0; i < values.size(); ++i) {
      csv << i << ',' << format_double(static_cast<double>(i) / static_cast<double>(values.size()))
          << ',' << format_double(values[i]) << '\n';
    }
  } else {
    csv << "index,row,col,value\n";
    for (Index i = 0; i < values.size(); ++i) {
      csv << i << ',' << i / config.n << ',' << i % config.n << ',' << format_double(values[i])
          << '\n';
    }
  }
  return csv.str();
}

std::string data_csv(const RunConfig& config, const Problem& problem) {
  const Vector& y = problem.observation.y;
  std::ostringstream csv;
  if (config.problem == ProblemKind::Inpainting) {
    const auto& op = dynamic_cast<const InpaintingForward&>(*problem.forward);
    csv << "index,x,value\n";
    for (Index r = 0; r < y.size(); ++r) {
      const Index i = op.kept_indices()[static_cast<std::size_t>(r)];
      csv << i << ',' << format_double(static_cast<double>(i) / static_cast<double>(config.n))
          << ',' << format_double(y[r]) << '\n';
    }
  } else if (config.problem == ProblemKind::Deconvolution) {
    return field_csv(config, y);
  } else {
    const auto& op = dynamic_cast<const RadonForward&>(*problem.forward);
    csv << "angle_index,theta,detector_index,eta,value\n";
    for (Index a = 0; a < config.n_angles; ++a) {
      for (Index k = 0; k < config.n_detectors; ++k) {
        csv << a << ',' << format_double(op.angle(a)) << ',' << k << ','
            << format_double(op.detector(k)) << ','
            << format_double(y[a * config.n_detectors + k]) << '\n';
      }
    }
  }
  return csv.str();
}

void log_record(std::ostream* log, const json& record) {
  if (log != nullptr) *log << record.dump() << '\n' << std::flush;
}

template <class T>
T get_field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Inpainting:
      return "inpainting";
    case ProblemKind::Deconvolution:
      return "deconvolution";
    case ProblemKind::Ct:
      return "ct";
  }
  return "unknown";
}

ProblemKind parse_problem(const std::string& name) {
  if (name == "inpainting") return ProblemKind::Inpainting;
  if (name == "deconvolution") return ProblemKind::Deconvolution;
  if (name == "ct") return ProblemKind::Ct;
  throw ConfigError("unknown problem '" + name + "' (expected inpainting, deconvolution or ct)");
}

Index RunConfig::unknowns() const { return problem == ProblemKind::Ct ? n * n : n; }

RtoConfig RunConfig::sampler_config() const {
  RtoConfig rto;
  rto.n_samples = n_samples;
  rto.eta = eta;
  rto.optimizer = optimizer;
  rto.seed = seed;
  rto.workers = workers;
  rto.initial_state = initial_state;
  return rto;
}

void RunConfig::validate() const {
  const Index max_n = problem == ProblemKind::Ct ? 128 : 8192;
  if (!is_power_of_two(n) || n < 2 || n > max_n) {
    throw ConfigError("n must be a power of two in [2, " + std::to_string(max_n) + "], got " +
                      std::to_string(n));
  }
  try {
    WaveletSpec::parse(wavelet);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!std::isfinite(s)) throw ConfigError("s must be finite");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("p must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  if (!(relative_noise > 0.0) || !std::isfinite(relative_noise)) {
    throw ConfigError("relative_noise must be positive");
  }
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
  if (workers < 1) throw ConfigError("workers must be positive");
  if (eta && !(*eta > 0.0)) throw ConfigError("eta must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (!(optimizer.gradient_tolerance > 0.0) || !(optimizer.step_tolerance > 0.0) ||
      optimizer.max_iterations < 1 || !(optimizer.initial_damping > 0.0)) {
    throw ConfigError("optimizer settings must be positive");
  }
  switch (problem) {
    case ProblemKind::Deconvolution:
      if (!(kernel_sigma > 0.0 && 3.0 * kernel_sigma < 0.5)) {
        throw ConfigError("kernel_sigma must lie in (0, 1/6)");
      }
      break;
    case ProblemKind::Inpainting:
      for (const auto& interval : removed) {
        if (!(interval.begin >= 0.0 && interval.begin < interval.end && interval.end <= 1.0)) {
          throw ConfigError("removed intervals must satisfy 0 <= begin < end <= 1");
        }
      }
      break;
    case ProblemKind::Ct:
      if (n_angles < 1 || n_detectors < 2) {
        throw ConfigError("CT needs at least 1 angle and 2 detectors");
      }
      break;
  }
  if (problem != ProblemKind::Ct) {
    for (double x : probes) {
      if (!(x >= 0.0 && x < 1.0)) throw ConfigError("probe positions must lie in [0, 1)");
    }
  }
  try {
    sampler_config().validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json removed = json::array();
  for (const auto& interval : c.removed) removed.push_back({interval.begin, interval.end});
  return json{
      {"problem", to_string(c.problem)},
      {"n", c.n},
      {"wavelet", c.wavelet},
      {"s", c.s},
      {"p", c.p},
      {"lambda", c.lambda},
      {"relative_noise", c.relative_noise},
      {"n_samples", c.n_samples},
      {"eta", c.eta ? json(*c.eta) : json(nullptr)},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"initial_state", to_string(c.initial_state)},
      {"kernel_sigma", c.kernel_sigma},
      {"removed", removed},
      {"n_angles", c.n_angles},
      {"n_detectors", c.n_detectors},
      {"probes", c.probes},
      {"optimizer",
       {{"gradient_tolerance", c.optimizer.gradient_tolerance},
        {"step_tolerance", c.optimizer.step_tolerance},
        {"max_iterations", c.optimizer.max_iterations},
        {"initial_damping", c.optimizer.initial_damping}}},
  };
}

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "problem", "n",         "wavelet", "s",            "p",        "lambda",
      "relative_noise",       "n_samples", "eta",        "seed",     "output_dir",
      "workers", "initial_state", "kernel_sigma", "removed", "n_angles",  "n_detectors", "probes",
      "optimizer"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }

  RunConfig c;
  if (doc.contains("problem")) c.problem = parse_problem(get_field<std::string>(doc, "problem"));
  if (doc.contains("n")) c.n = get_field<Index>(doc, "n");
  if (doc.contains("wavelet")) c.wavelet = get_field<std::string>(doc, "wavelet");
  if (doc.contains("s")) c.s = get_field<double>(doc, "s");
  if (doc.contains("p")) c.p = get_field<double>(doc, "p");
  if (doc.contains("lambda")) c.lambda = get_field<double>(doc, "lambda");
  if (doc.contains("relative_noise")) c.relative_noise = get_field<double>(doc, "relative_noise");
  if (doc.contains("n_samples")) c.n_samples = get_field<int>(doc, "n_samples");
  if (doc.contains("eta") && !doc.at("eta").is_null()) c.eta = get_field<double>(doc, "eta");
  if (doc.contains("seed")) c.seed = get_field<std::uint64_t>(doc, "seed");
  if (doc.contains("output_dir")) c.output_dir = get_field<std::string>(doc, "output_dir");
  if (doc.contains("workers")) c.workers = get_field<int>(doc, "workers");
  if (doc.contains("initial_state")) {
    try {
      c.initial_state = parse_initial_state(get_field<std::string>(doc, "initial_state"));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }
  if (doc.contains("kernel_sigma")) c.kernel_sigma = get_field<double>(doc, "kernel_sigma");
  if (doc.contains("removed")) {
    const auto pairs = get_field<std::vector<std::vector<double>>>(doc, "removed");
    c.removed.clear();
    for (const auto& pair : pairs) {
      if (pair.size() != 2) throw ConfigError("removed intervals must be [begin, end] pairs");
      c.removed.push_back({pair[0], pair[1]});
    }
  }
  if (doc.contains("n_angles")) c.n_angles = get_field<Index>(doc, "n_angles");
  if (doc.contains("n_detectors")) c.n_detectors = get_field<Index>(doc, "n_detectors");
  if (doc.contains("probes")) c.probes = get_field<std::vector<double>>(doc, "probes");
  if (doc.contains("optimizer")) {
    const json& opt = doc.at("optimizer");
    if (!opt.is_object()) throw ConfigError("optimizer must be an object");
    for (const auto& [key, value] : opt.items()) {
      if (key == "gradient_tolerance") {
        c.optimizer.gradient_tolerance = get_field<double>(opt, "gradient_tolerance");
      } else if (key == "step_tolerance") {
        c.optimizer.step_tolerance = get_field<double>(opt, "step_tolerance");
      } else if (key == "max_iterations") {
        c.optimizer.max_iterations = get_field<int>(opt, "max_iterations");
      } else if (key == "initial_damping") {
        c.optimizer.initial_damping = get_field<double>(opt, "initial_damping");
      } else {
        throw ConfigError("unknown optimizer field '" + key + "'");
      }
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

Problem build_problem(const RunConfig& config) {
  config.validate();
  Problem problem;
  problem.config = config;
  switch (config.problem) {
    case ProblemKind::Inpainting:
      problem.forward = inpainting_operator(config.n, config.removed);
      problem.truth = phantom_1d(config.n);
      break;
    case ProblemKind::Deconvolution:
      problem.forward = convolution_operator(config.n, config.kernel_sigma);
      problem.truth = phantom_1d(config.n);
      break;
    case ProblemKind::Ct:
      problem.forward = radon_operator(config.n, config.n_angles, config.n_detectors);
      problem.truth = phantom_shepp_logan(config.n);
      break;
  }
  problem.observation = make_data(*problem.forward, problem.truth, config.relative_noise,
                                  stream_seed(config.seed, kDataStream));
  BesovPrior prior(WaveletSpec::parse(config.wavelet), config.dimension(), log2_exact(config.n),
                   config.s, config.p, config.lambda);
  problem.posterior.emplace(std::move(prior), problem.forward, problem.observation.y,
                            problem.observation.sigma);
  return problem;
}

std::vector<Index> probe_coordinates(const RunConfig& config) {
  if (config.problem == ProblemKind::Ct) throw ParameterError("probe coordinates need a 1D problem");
  std::vector<Index> indices;
  for (double x : config.probes) {
    if (!(x >= 0.0 && x < 1.0)) {
      throw ParameterError("probe position " + format_double(x) + " outside [0, 1)");
    }
    // Positions just below 1 round onto the periodic image of 0.
    indices.push_back(static_cast<Index>(std::llround(x * static_cast<double>(config.n))) %
                      config.n);
  }
  return indices;
}

json stats_to_json(const ChainStats& stats) {
  json ess = json::array();
  for (Index i = 0; i < stats.ess.size(); ++i) ess.push_back(finite_or_null(stats.ess[i]));
  return json{
      {"n_samples", stats.n_samples},
      {"accepted_count", stats.accepted_count},
      {"acceptance_rate", stats.acceptance_rate},
      {"seconds", stats.seconds},
      {"ess_min", finite_or_null(stats.ess_min)},
      {"ess_median", finite_or_null(stats.ess_median)},
      {"ess_max", finite_or_null(stats.ess_max)},
      {"ess_per_second_min", finite_or_null(stats.ess_per_second_min)},
      {"ess_per_second_median", finite_or_null(stats.ess_per_second_median)},
      {"ess_per_second_max", finite_or_null(stats.ess_per_second_max)},
      {"degenerate_coordinates", stats.degenerate_coordinates},
      {"ess", ess},
  };
}

RunSummary run_experiment(const RunConfig& config, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  OutputSet out(config.output_dir);
  try {
    Problem problem = build_problem(config);
    const Posterior& posterior = *problem.posterior;
    const BesovPrior& prior = posterior.prior();
    log_record(log, {{"event", "problem"},
                     {"problem", to_string(config.problem)},
                     {"n", posterior.n()},
                     {"m", posterior.m()},
                     {"sigma", posterior.sigma()}});

    const RtoSampler sampler(posterior, config.sampler_config());
    const auto map_start = std::chrono::steady_clock::now();
    const RtoState state = sampler.prepare(sampler.solve_map(Vector::Zero(posterior.n())));
    const double map_seconds = elapsed(map_start);
    log_record(log, {{"event", "map"},
                     {"status", to_string(state.map.status)},
                     {"iterations", state.map.iterations},
                     {"gradient_norm", state.map.gradient_norm},
                     {"cost", state.map.cost},
                     {"log_c", state.log_c_map}});

    ChainResult chain = sampler.run_chain(state);
    chain.map_seconds = map_seconds;
    chain.total_seconds += map_seconds;
    const int valid = static_cast<int>(std::count(chain.valid.begin(), chain.valid.end(), 1));
    log_record(log, {{"event", "chain"},
                     {"proposals", config.n_samples},
                     {"valid", valid},
                     {"accepted", chain.accepted_count},
                     {"acceptance_rate", chain.acceptance_rate},
                     {"seconds", chain.proposal_seconds}});

    ChainStats stats = summarize(chain);
    const Index n = posterior.n();

    write_samples(out, "samples_f.bin", chain.f_samples);
    write_samples(out, "samples_h.bin", chain.h_samples);
    const json meta = {
        {"format", "float64"},
        {"byte_order", "little"},
        {"order", "sample-major"},
        {"n", n},
        {"n_samples", config.n_samples},
        {"image_side", config.dimension() == 2 ? json(config.n) : json(nullptr)},
        {"accepted_count", chain.accepted_count},
        {"acceptance_rate", chain.acceptance_rate},
        {"seconds", chain.total_seconds},
        {"files", {{"f", "samples_f.bin"}, {"h", "samples_h.bin"}}},
    };
    out.write_text("samples_meta.json", meta.dump(2) + "\n");

    out.write_text("mean.csv", field_csv(config, stats.mean));
    out.write_text("ci_lower.csv", field_csv(config, stats.ci_lower));
    out.write_text("ci_upper.csv", field_csv(config, stats.ci_upper));
    out.write_text("truth.csv", field_csv(config, problem.truth));

    json probes = json::array();
    if (config.dimension() == 1) {
      out.write_text("data.csv", data_csv(config, problem));
      const int max_lag = std::min(kMaxAcfLag, config.n_samples - 1);
      for (Index index : probe_coordinates(config)) {
        const Vector row = chain.f_samples.row(index).transpose();
        const std::span<const double> series(row.data(), static_cast<std::size_t>(row.size()));
        std::ostringstream trace;
        trace << "iteration,value\n";
        for (Index k = 0; k < row.size(); ++k) trace << k << ',' << format_double(row[k]) << '\n';
        out.write_text("trace_" + std::to_string(index) + ".csv", trace.str());
        std::ostringstream acf_csv;
        acf_csv << "lag,acf\n";
        bool degenerate = false;
        try {
          const Vector rho = acf(series, max_lag);
          for (Index t = 0; t < rho.size(); ++t) acf_csv << t << ',' << format_double(rho[t]) << '\n';
        } catch (const DegenerateChainError&) {
          degenerate = true;
        }
        out.write_text("acf_" + std::to_string(index) + ".csv", acf_csv.str());
        probes.push_back({{"index", index},
                          {"x", static_cast<double>(index) / static_cast<double>(config.n)},
                          {"degenerate", degenerate}});
      }
    } else {
      out.write_text("sinogram.csv", data_csv(config, problem));
      const WaveletSystem& wavelet = prior.wavelet();
      const Vector mean_coefficients = wavelet.forward(stats.mean);
      const Vector sample_coefficients = wavelet.forward(chain.f_samples.col(chain.f_samples.cols() - 1));
      const CoefficientLayout& layout = wavelet.layout();
      for (int j = 0; j < layout.levels(); ++j) {
        const Index side = Index{1} << j;
        for (int orientation = 1; orientation <= 3; ++orientation) {
          std::ostringstream csv;
          csv << "row,col,posterior_mean,posterior_sample\n";
          for (Index k = 0; k < layout.orientation_count(j); ++k) {
            const Index flat = layout.flat_index({j, orientation, k});
            csv << k / side << ',' << k % side << ',' << format_double(mean_coefficients[flat])
                << ',' << format_double(sample_coefficients[flat]) << '\n';
          }
          out.write_text("coeff_level" + std::to_string(j) + "_or" + std::to_string(orientation) +
                             ".csv",
                         csv.str());
        }
      }
    }

    json diagnostics = stats_to_json(stats);
    diagnostics["probes"] = probes;
    diagnostics["valid_proposals"] = valid;
    out.write_text("diagnostics.json", diagnostics.dump(2) + "\n");

    const OperatorDescriptor descriptor = problem.forward->descriptor();
    json manifest = {
        {"version", std::string("besov-rto ") + BESOV_RTO_VERSION + " (" + BESOV_RTO_REVISION + ")"},
        {"config", config_to_json(config)},
        {"derived",
         {{"sigma", posterior.sigma()},
          {"kappa", prior.kappa()},
          {"tau", prior.tau()},
          {"alpha", prior.alpha()},
          {"m", posterior.m()},
          {"unknowns", n},
          {"levels", prior.levels()},
          {"eta", chain.eta},
          {"realized_noise_level", problem.observation.realized_level},
          {"operator", {{"kind", descriptor.kind}, {"parameters", descriptor.parameters}}}}},
        {"map",
         {{"status", to_string(chain.map.status)},
          {"iterations", chain.map.iterations},
          {"gradient_norm", chain.map.gradient_norm},
          {"cost", chain.map.cost},
          {"log_c", chain.log_c_map}}},
        {"acceptance_rate", chain.acceptance_rate},
        {"accepted_count", chain.accepted_count},
        {"valid_proposals", valid},
        {"saturated_components", chain.saturated_components},
        {"timing",
         {{"map_seconds", chain.map_seconds},
          {"proposal_seconds", chain.proposal_seconds},
          {"chain_seconds", chain.total_seconds},
          {"wall_seconds", elapsed(start)}}},
    };
    out.write_text("manifest.json", manifest.dump(2) + "\n");
    log_record(log, {{"event", "done"}, {"output_dir", out.dir().string()}});
    return RunSummary{std::move(chain), std::move(stats), std::move(manifest), out.dir()};
  } catch (...) {
    out.remove_all();
    throw;
  }
}

SweepResult discretization_sweep(const RunConfig& base, const std::vector<Index>& sizes,
                                 std::ostream* log) {
  if (base.problem == ProblemKind::Ct) throw ConfigError("the discretization sweep needs a 1D problem");
  if (sizes.size() < 2) throw ConfigError("the sweep needs at least two sizes");
  SweepResult result;
  result.sizes = sizes;
  std::sort(result.sizes.begin(), result.sizes.end());
  if (std::adjacent_find(result.sizes.begin(), result.sizes.end()) != result.sizes.end()) {
    throw ConfigError("sweep sizes must be distinct");
  }
  for (Index size : result.sizes) {
    if (!is_power_of_two(size)) throw ConfigError("sweep sizes must be powers of two");
  }
  const Index coarse = result.sizes.front();
  const auto count = static_cast<Index>(result.sizes.size());
  result.means.resize(coarse, count);

  const fs::path root(base.output_dir);
  for (Index c = 0; c < count; ++c) {
    RunConfig config = base;
    config.n = result.sizes[static_cast<std::size_t>(c)];
    config.output_dir = (root / ("n" + std::to_string(config.n))).string();
    const RunSummary run = run_experiment(config, log);
    const Index stride = config.n / coarse;
    for (Index i = 0; i < coarse; ++i) result.means(i, c) = run.stats.mean[i * stride];
  }

  result.differences = Matrix::Zero(count, count);
  for (Index a = 0; a < count; ++a) {
    for (Index b = 0; b < count; ++b) {
      if (a == b) continue;
      const Index finer = std::max(a, b);
      result.differences(a, b) =
          (result.means.col(a) - result.means.col(b)).norm() / result.means.col(finer).norm();
    }
  }

  if (count >= 3) {
    double smallest = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < count; ++a) {
      for (Index b = a + 1; b < count; ++b) smallest = std::min(smallest, result.differences(a, b));
    }
    if (result.differences(count - 2, count - 1) > smallest) {
      result.warnings.push_back(
          "relative difference between the two finest sizes is not the smallest off-diagonal entry");
    }
  }
  for (const auto& warning : result.warnings) log_record(log, {{"event", "warning"}, {"message", warning}});

  OutputSet out(root);
  std::ostringstream means_csv;
  means_csv << "x";
  for (Index size : result.sizes) means_csv << ",n" << size;
  means_csv << '\n';
  for (Index i = 0; i < coarse; ++i) {
    means_csv << format_double(static_cast<double>(i) / static_cast<double>(coarse));
    for (Index c = 0; c < count; ++c) means_csv << ',' << format_double(result.means(i, c));
    means_csv << '\n';
  }
  out.write_text("sweep_means.csv", means_csv.str());

  std::ostringstream diff_csv;
  diff_csv << "n";
  for (Index size : result.sizes) diff_csv << ",n" << size;
  diff_csv << '\n';
  for (Index a = 0; a < count; ++a) {
    diff_csv << result.sizes[static_cast<std::size_t>(a)];
    for (Index b = 0; b < count; ++b) diff_csv << ',' << format_double(result.differences(a, b));
    diff_csv << '\n';
  }
  out.write_text("sweep_differences.csv", diff_csv.str());
  return result;
}

Matrix read_samples(const fs::path& file, Index n, Index count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  const auto expected = static_cast<std::uintmax_t>(n * count * 8);
  if (fs::file_size(file) != expected) {
    throw ConfigError(file.string() + " has " + std::to_string(fs::file_size(file)) +
                      " bytes, expected " + std::to_string(expected));
  }
  std::vector<char> buffer(static_cast<std::size_t>(expected));
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  Matrix samples(n, count);
  for (Index i = 0; i < samples.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, buffer.data() + 8 * i, 8);
    samples.data()[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  return samples;
}

ChainStats diagnose(const fs::path& run_dir) {
  const fs::path meta_path = run_dir / "samples_meta.json";
  std::ifstream in(meta_path);
  if (!in) throw ConfigError("cannot read " + meta_path.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(meta_path.string() + " is not valid JSON: " + e.what());
  }
  if (get_field<std::string>(meta, "format") != "float64" ||
      get_field<std::string>(meta, "byte_order") != "little" ||
      get_field<std::string>(meta, "order") != "sample-major") {
    throw ConfigError("unsupported sample format in " + meta_path.string());
  }
  const auto n = get_field<Index>(meta, "n");
  const auto count = get_field<Index>(meta, "n_samples");
  const auto file = get_field<std::string>(meta.at("files"), "f");
  const Matrix samples = read_samples(run_dir / file, n, count);
  return summarize(samples, get_field<int>(meta, "accepted_count"),
                   get_field<double>(meta, "acceptance_rate"), get_field<double>(meta, "seconds"));
}

}  // namespace besov
