// Python bindings for the core library.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vibronic_td/calibration.hpp"
#include "vibronic_td/config.hpp"
#include "vibronic_td/experiment.hpp"
#include "vibronic_td/oracle.hpp"

namespace py = pybind11;
using namespace vibronic_td;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Autocorrelation from_arrays(const std::vector<double>& t, const std::vector<cplx>& values) {
  if (t.size() != values.size()) throw DomainError("t and values differ in length");
  return Autocorrelation::exact(t, values);
}

py::dict autocorrelation_dict(const Autocorrelation& a) {
  py::dict d;
  d["t"] = to_array(a.t);
  d["values"] = to_array(a.values);
  d["re_stderr"] = to_array(a.re_stderr);
  d["im_stderr"] = to_array(a.im_stderr);
  return d;
}

py::tuple spectrum_tuple(const SpectrumResult& s) { return py::make_tuple(to_array(s.freq), to_array(s.intensity)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Time-domain vibronic spectra on an emulated trapped-ion simulator";
  m.attr("__version__") = tool_version();

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TruncationError>(m, "TruncationError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<So2Params>(m, "So2Params")
      .def(py::init<>())
      .def_static("standard", &So2Params::standard)
      .def_readwrite("omega_b", &So2Params::omega_b)
      .def_readwrite("alpha", &So2Params::alpha)
      .def_readwrite("delta_E", &So2Params::delta_E);

  py::class_<UnitMap>(m, "UnitMap")
      .def(py::init<>())
      .def_static("standard", &UnitMap::standard)
      .def_readwrite("scale_factor", &UnitMap::scale_factor);

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_static("fitted", &NoiseSpec::fitted)
      .def_static("none", &NoiseSpec::none)
      .def_readwrite("gamma_h", &NoiseSpec::gamma_h)
      .def_readwrite("tau_d", &NoiseSpec::tau_d)
      .def_readwrite("d_delta", &NoiseSpec::d_delta)
      .def_readwrite("nbar", &NoiseSpec::nbar)
      .def_readwrite("readout_error", &NoiseSpec::readout_error)
      .def("validate", &NoiseSpec::validate);

  m.def("map_units", [](const So2Params& p, const UnitMap& u) {
    const SimulatorFrequencies f = map_units(p, u);
    return py::make_tuple(f.delta, f.omega_s);
  }, "(delta, Omega_S) in rad/s on the simulator clock");

  m.def("analytic_so2_autocorrelation",
        [](const So2Params& p, const std::vector<double>& t, const UnitMap& u) {
          return to_array(analytic_so2_autocorrelation(p, t, u).values);
        },
        py::arg("params"), py::arg("t"), py::arg("unit_map") = UnitMap());

  m.def("run_so2",
        [](const So2Params& p, const UnitMap& u, const NoiseSpec& noise, const std::vector<double>& t, int n_max,
           int shots, std::uint64_t seed, int workers) {
          PropagationPlan plan;
          plan.t_grid = t;
          plan.method = noise.is_noiseless() ? PropagationMethod::Exact : PropagationMethod::Lindblad;
          ShotPlan sp;
          sp.sampled = shots > 0;
          sp.shots_per_point = shots > 0 ? shots : 1;
          sp.rng_seed = seed;
          So2RunOptions opts;
          opts.n_max = n_max;
          opts.workers = workers;
          Autocorrelation a;
          {
            py::gil_scoped_release release;
            a = run_so2_sequence(p, u, noise, plan, sp, opts);
          }
          return autocorrelation_dict(a);
        },
        py::arg("params"), py::arg("unit_map"), py::arg("noise"), py::arg("t"), py::arg("n_max") = 32,
        py::arg("shots") = 0, py::arg("seed") = 0, py::arg("workers") = 0,
        "Simulated SO2 pulse sequence; shots = 0 returns exact expectation values");

  m.def("poisson_sticks", [](double omega, double alpha, int k_max) {
    const StickSpectrum s = poisson_sticks(omega, alpha, k_max);
    std::vector<double> w, p;
    for (const auto& [f, x] : s.lines) {
      w.push_back(f);
      p.push_back(x);
    }
    return py::make_tuple(to_array(w), to_array(p));
  });

  m.def("fourier_pade",
        [](const std::vector<double>& t, const std::vector<cplx>& values, const std::vector<double>& freq,
           double theta, double window_tau, int order) {
          Autocorrelation a = from_arrays(t, values);
          if (window_tau > 0.0) a = apply_window(a, window_tau);
          FpaOptions o;
          o.order = order;
          return spectrum_tuple(fourier_pade(a, theta, freq, o));
        },
        py::arg("t"), py::arg("values"), py::arg("freq"), py::arg("theta") = 0.0, py::arg("window_tau") = 0.0,
        py::arg("order") = 0);

  m.def("dft_spectrum",
        [](const std::vector<double>& t, const std::vector<cplx>& values, const std::vector<double>& freq,
           double window_tau) {
          Autocorrelation a = from_arrays(t, values);
          if (window_tau > 0.0) a = apply_window(a, window_tau);
          return spectrum_tuple(dft_spectrum(a, freq));
        },
        py::arg("t"), py::arg("values"), py::arg("freq"), py::arg("window_tau") = 0.0);

  m.def("coherent_bsb_population",
        [](const std::vector<double>& t, double Omega, double eta, double beta, double zeta, int k_max) {
          return to_array(coherent_bsb_population(t, Omega, eta, beta, zeta, k_max));
        });

  m.def("validate_config", [](const std::filesystem::path& path) {
    const ValidationReport r = load_config(path, nullptr);
    return py::make_tuple(r.errors, r.warnings);
  }, "(errors, warnings) for a config file");

  m.def("run_config",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> output_dir,
           std::optional<std::uint64_t> seed) {
          RunConfig cfg;
          const ValidationReport r = load_config(path, &cfg);
          if (!r.ok()) throw ConfigError(r.text());
          if (output_dir) cfg.output_dir = *output_dir;
          if (seed) cfg.seed = *seed;
          std::string results;
          {
            py::gil_scoped_release release;
            results = run_experiment(cfg).dump();
          }
          return py::module_::import("json").attr("loads")(results);
        },
        py::arg("path"), py::arg("output_dir") = py::none(), py::arg("seed") = py::none(),
        "Runs a config file and returns the manifest results summary");
}
