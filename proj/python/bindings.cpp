#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "besov_rto/besov_prior.hpp"
#include "besov_rto/diagnostics.hpp"
#include "besov_rto/errors.hpp"
#include "besov_rto/forward_models.hpp"
#include "besov_rto/gen_gaussian.hpp"
#include "besov_rto/rto_sampler.hpp"
#include "besov_rto/runner.hpp"
#include "besov_rto/wavelet.hpp"

namespace py = pybind11;
using namespace besov;

namespace {

// Copy for the span-based diagnostics.
std::vector<double> as_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// pybind11 holders cannot be const.
using ForwardHolder = std::shared_ptr<LinearForward>;

ForwardHolder hold(ForwardPtr forward) { return std::const_pointer_cast<LinearForward>(forward); }

RunConfig config_from_text(const std::string& text) {
  return config_from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Besov-prior RTO-MH sampler";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<ChainError>(m, "ChainError", numerical.ptr());

  py::class_<WaveletSpec>(m, "WaveletSpec")
      .def_static("parse", &WaveletSpec::parse)
      .def_property_readonly("name", &WaveletSpec::name)
      .def_property_readonly("scaling_filter", &WaveletSpec::scaling_filter);

  py::class_<WaveletSystem>(m, "WaveletSystem")
      .def(py::init<WaveletSpec, int, int>(), py::arg("spec"), py::arg("dimension"),
           py::arg("levels"))
      .def_property_readonly("size", &WaveletSystem::size)
      .def("forward", &WaveletSystem::forward)
      .def("inverse", &WaveletSystem::inverse)
      .def("dense_matrix", &WaveletSystem::dense_matrix);

  m.def("besov_weights",
        [](double s, double p, int dimension, int levels) {
          return besov_weights(s, p, dimension, levels).diagonal;
        },
        py::arg("s"), py::arg("p"), py::arg("dimension"), py::arg("levels"));

  py::class_<GenGaussian>(m, "GenGaussian")
      .def(py::init<double, double>(), py::arg("p"), py::arg("lam"))
      .def_property_readonly("alpha", &GenGaussian::alpha)
      .def_property_readonly("tau", &GenGaussian::tau)
      .def("variance", &GenGaussian::variance)
      .def("log_pdf", &GenGaussian::log_pdf)
      .def("cdf", &GenGaussian::cdf)
      .def("quantile", &GenGaussian::quantile);
  m.def("g1d", &g1d, py::arg("h"), py::arg("gg"));
  m.def("g1d_deriv", &g1d_deriv, py::arg("h"), py::arg("gg"));

  py::class_<BesovPrior>(m, "BesovPrior")
      .def(py::init<WaveletSpec, int, int, double, double, double>(), py::arg("wavelet"),
           py::arg("dimension"), py::arg("levels"), py::arg("s"), py::arg("p"), py::arg("lam"))
      .def_property_readonly("kappa", &BesovPrior::kappa)
      .def_property_readonly("size", &BesovPrior::size)
      .def("sample", &BesovPrior::sample, py::arg("seed"))
      .def("norm", &BesovPrior::norm)
      .def("log_density", &BesovPrior::log_density)
      .def("transform", [](const BesovPrior& prior, const Vector& h) {
        return prior.transform().apply(h);
      });

  py::class_<LinearForward, ForwardHolder>(m, "LinearForward")
      .def_property_readonly("rows", &LinearForward::rows)
      .def_property_readonly("cols", &LinearForward::cols)
      .def("apply", &LinearForward::apply)
      .def("adjoint", &LinearForward::adjoint)
      .def("dense", &LinearForward::dense);
  m.def("dense_operator", [](const Matrix& a) -> ForwardHolder {
    return std::make_shared<DenseForward>(a);
  });
  m.def("inpainting_operator",
        [](Index n, const std::vector<std::pair<double, double>>& removed) {
          std::vector<Interval> intervals;
          for (const auto& [begin, end] : removed) intervals.push_back({begin, end});
          return hold(inpainting_operator(n, intervals));
        },
        py::arg("n"), py::arg("removed"));
  m.def("convolution_operator",
        [](Index n, double kernel_sigma) { return hold(convolution_operator(n, kernel_sigma)); },
        py::arg("n"), py::arg("kernel_sigma"));
  m.def("radon_operator",
        [](Index side, Index n_angles, Index n_detectors) {
          return hold(radon_operator(side, n_angles, n_detectors));
        },
        py::arg("image_side"), py::arg("n_angles"), py::arg("n_detectors"));
  m.def("phantom_1d", &phantom_1d);
  m.def("phantom_shepp_logan", &phantom_shepp_logan);

  py::class_<Observation>(m, "Observation")
      .def_readonly("y", &Observation::y)
      .def_readonly("sigma", &Observation::sigma)
      .def_readonly("realized_level", &Observation::realized_level);
  m.def("make_data", &make_data, py::arg("forward"), py::arg("f_true"),
        py::arg("relative_level"), py::arg("seed"));

  py::class_<Posterior>(m, "Posterior")
      .def(py::init<BesovPrior, ForwardHolder, Vector, double>(), py::arg("prior"),
           py::arg("forward"), py::arg("y"), py::arg("sigma"))
      .def("log_posterior_h", &Posterior::log_posterior_h)
      .def("log_posterior_f", &Posterior::log_posterior_f);

  py::enum_<InitialState>(m, "InitialState")
      .value("MAP", InitialState::Map)
      .value("FIRST_PROPOSAL", InitialState::FirstProposal);

  py::class_<RtoConfig>(m, "RtoConfig")
      .def(py::init<>())
      .def_readwrite("n_samples", &RtoConfig::n_samples)
      .def_readwrite("eta", &RtoConfig::eta)
      .def_readwrite("seed", &RtoConfig::seed)
      .def_readwrite("workers", &RtoConfig::workers)
      .def_readwrite("initial_state", &RtoConfig::initial_state);

  py::class_<ChainResult>(m, "ChainResult")
      .def_readonly("proposals", &ChainResult::proposals)
      .def_readonly("h_samples", &ChainResult::h_samples)
      .def_readonly("f_samples", &ChainResult::f_samples)
      .def_readonly("log_c", &ChainResult::log_c)
      .def_readonly("accepted_count", &ChainResult::accepted_count)
      .def_readonly("acceptance_rate", &ChainResult::acceptance_rate)
      .def_readonly("h_map", &ChainResult::h_map)
      .def_readonly("log_c_map", &ChainResult::log_c_map)
      .def_property_readonly("accepted", [](const ChainResult& r) {
        return std::vector<bool>(r.accepted.begin(), r.accepted.end());
      });

  m.def("run_chain",
        [](const Posterior& posterior, const RtoConfig& config) {
          py::gil_scoped_release release;
          return RtoSampler(posterior, config).run_chain();
        },
        py::arg("posterior"), py::arg("config"));

  py::class_<ChainStats>(m, "ChainStats")
      .def_readonly("mean", &ChainStats::mean)
      .def_readonly("ci_lower", &ChainStats::ci_lower)
      .def_readonly("ci_upper", &ChainStats::ci_upper)
      .def_readonly("ess", &ChainStats::ess)
      .def_readonly("ess_min", &ChainStats::ess_min)
      .def_readonly("ess_median", &ChainStats::ess_median)
      .def_readonly("ess_max", &ChainStats::ess_max)
      .def_readonly("accepted_count", &ChainStats::accepted_count)
      .def_readonly("acceptance_rate", &ChainStats::acceptance_rate);

  m.def("acf", [](const Vector& chain, int max_lag) { return acf(as_vector(chain), max_lag); },
        py::arg("chain"), py::arg("max_lag"));
  m.def("ess", py::overload_cast<const Matrix&>(&ess), py::arg("chains"));
  m.def("summarize", py::overload_cast<const ChainResult&, double>(&summarize),
        py::arg("result"), py::arg("level") = 0.95);

  m.def("run_experiment",
        [](const std::string& config_json) {
          const RunConfig config = config_from_text(config_json);
          py::gil_scoped_release release;
          return run_experiment(config).manifest.dump();
        },
        py::arg("config_json"));
  m.def("diagnose", [](const std::filesystem::path& dir) { return stats_to_json(diagnose(dir)).dump(); },
        py::arg("run_dir"));
}
