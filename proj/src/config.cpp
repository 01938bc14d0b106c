#include "vibronic_td/config.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

namespace vibronic_td {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Rule = std::function<bool(double)>;

// Reads typed fields of one JSON object, recording violations by path.
class Fields {
 public:
  Fields(const json* obj, std::string path, ValidationReport& report)
      : obj_(obj), path_(std::move(path)), report_(report) {
    if (obj_ && !obj_->is_object()) {
      error(path_, "expected an object");
      obj_ = nullptr;
    }
  }

  bool has(const char* key) const { return obj_ && obj_->contains(key) && !(*obj_)[key].is_null(); }
  const json* child(const char* key) const { return has(key) ? &(*obj_)[key] : nullptr; }
  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double def, const Rule& rule = nullptr, const char* what = nullptr) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_number()) {
      error(path(key), "expected a number");
      return def;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (rule && !rule(x))) {
      error(path(key), what ? what : "out of range");
      return def;
    }
    return x;
  }

  int integer(const char* key, int def, const Rule& rule = nullptr, const char* what = nullptr) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_number_integer()) {
      error(path(key), "expected an integer");
      return def;
    }
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX || (rule && !rule(static_cast<double>(x)))) {
      error(path(key), what ? what : "out of range");
      return def;
    }
    return static_cast<int>(x);
  }

  bool boolean(const char* key, bool def) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_boolean()) {
      error(path(key), "expected true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& def) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = (*obj_)[key];
    if (!v.is_string()) {
      error(path(key), "expected a string");
      return def;
    }
    return v.get<std::string>();
  }

  template <class E>
  E choice(const char* key, E def, const std::vector<std::pair<std::string, E>>& options) {
    seen_.insert(key);
    if (!has(key)) return def;
    const json& v = (*obj_)[key];
    std::string allowed;
    for (const auto& [name, val] : options) {
      if (v.is_string() && v.get<std::string>() == name) return val;
      allowed += (allowed.empty() ? "" : ", ") + name;
    }
    error(path(key), "expected one of: " + allowed);
    return def;
  }

  void mark(const char* key) { seen_.insert(key); }

  void warn_unknown() {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it) {
      if (!seen_.count(it.key())) report_.warnings.push_back(path(it.key().c_str()) + ": unknown field ignored");
    }
  }

  void error(const std::string& where, const std::string& msg) { report_.errors.push_back(where + ": " + msg); }

 private:
  const json* obj_;
  std::string path_;
  ValidationReport& report_;
  std::set<std::string> seen_;
};

const Rule positive = [](double x) { return x > 0.0; };
const Rule non_negative = [](double x) { return x >= 0.0; };
const Rule at_least_one = [](double x) { return x >= 1.0; };
const Rule at_least_two = [](double x) { return x >= 2.0; };

const std::vector<std::pair<std::string, Experiment>> kExperiments = {
    {"so2-fig4", Experiment::So2Fig4},
    {"circuit-equivalence", Experiment::CircuitEquivalence},
    {"qvc-spectrum", Experiment::QvcSpectrum},
    {"detuning-scan", Experiment::DetuningScan},
    {"phase-scan", Experiment::PhaseScan},
    {"displacement-fit", Experiment::DisplacementFit},
};

const std::vector<std::pair<std::string, PropagationMethod>> kMethods = {
    {"exact", PropagationMethod::Exact},
    {"lindblad", PropagationMethod::Lindblad},
    {"trotter", PropagationMethod::Trotter},
};

const std::vector<std::pair<std::string, SpectrumMethod>> kSpectrumMethods = {
    {"fpa", SpectrumMethod::FPA},
    {"dft", SpectrumMethod::DFT},
};

const std::vector<std::pair<std::string, AxisFrame>> kAxes = {
    {"simulator", AxisFrame::Simulator},
    {"molecular", AxisFrame::Molecular},
};

template <class E>
std::string name_of(E v, const std::vector<std::pair<std::string, E>>& options) {
  for (const auto& [n, e] : options) {
    if (e == v) return n;
  }
  return "?";
}

bool experiment_uses_spectrum(Experiment e) {
  return e == Experiment::So2Fig4 || e == Experiment::QvcSpectrum;
}

bool is_calibration(Experiment e) {
  return e == Experiment::DetuningScan || e == Experiment::PhaseScan || e == Experiment::DisplacementFit;
}

// Nearest existing ancestor must be a writable directory.
bool output_dir_writable(const fs::path& dir) {
  std::error_code ec;
  fs::path p = fs::absolute(dir, ec);
  if (ec) return false;
  while (!p.empty() && !fs::exists(p, ec)) {
    if (p == p.parent_path()) break;
    p = p.parent_path();
  }
  if (!fs::is_directory(p, ec)) return false;
  return ::access(p.c_str(), W_OK) == 0;
}

So2Params parse_so2_block(Fields& f) {
  So2Params p = So2Params::standard();
  p.omega_b = kTwoPi * f.number("omega_b_Hz", p.omega_b / kTwoPi, positive, "must be > 0");
  p.alpha = f.number("alpha", p.alpha);
  p.delta_E = kTwoPi * f.number("delta_E_Hz", 0.0);
  p.omega_ground = kTwoPi * f.number("omega_ground_Hz", 0.0, non_negative, "must be >= 0");
  f.warn_unknown();
  return p;
}

}  // namespace

std::string experiment_name(Experiment e) { return name_of(e, kExperiments); }

std::string ValidationReport::text() const {
  std::ostringstream os;
  for (const auto& e : errors) os << "error: " << e << "\n";
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  if (errors.empty()) os << "configuration OK\n";
  return os.str();
}

MoleculeFile load_molecule_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("molecule_file: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("molecule_file: invalid JSON: " + std::string(e.what()));
  }
  MoleculeFile out;
  if (j.is_object() && j.contains("so2")) {
    ValidationReport r;
    Fields f(&j["so2"], "molecule.so2", r);
    So2Params p = parse_so2_block(f);
    if (!r.ok()) throw ConfigError(r.errors.front());
    try {
      p.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("molecule.so2: ") + e.what());
    }
    out.so2 = p;
  } else {
    out.qvc = parse_molecule(ss.str());
  }
  return out;
}

ValidationReport parse_config(const json& doc, const fs::path& base_dir, RunConfig* out) {
  ValidationReport r;
  RunConfig cfg;
  Fields top(&doc, "", r);
  if (!doc.is_object()) return r;

  if (!top.has("experiment")) {
    top.error("experiment", "required");
  }
  cfg.experiment = top.choice("experiment", Experiment::So2Fig4, kExperiments);

  // molecule
  if (top.has("molecule_file")) {
    fs::path mf = top.string("molecule_file", "");
    if (mf.is_relative()) mf = base_dir / mf;
    cfg.molecule_file = mf;
    if (!fs::exists(mf)) {
      top.error("molecule_file", "file not found: " + mf.string());
    } else {
      try {
        MoleculeFile m = load_molecule_file(mf);
        if (m.so2) cfg.so2 = *m.so2;
        cfg.qvc = m.qvc;
      } catch (const std::exception& e) {
        top.error("molecule_file", e.what());
      }
    }
  } else {
    top.mark("molecule_file");
  }
  if (const json* s = top.child("so2")) {
    Fields f(s, "so2", r);
    cfg.so2 = parse_so2_block(f);
  }
  top.mark("so2");
  const bool needs_qvc = cfg.experiment == Experiment::QvcSpectrum || cfg.experiment == Experiment::CircuitEquivalence;
  if (needs_qvc && !cfg.qvc) top.error("molecule_file", "a QVC molecule file is required for this experiment");

  // units
  {
    Fields f(top.child("unit_map"), "unit_map", r);
    top.mark("unit_map");
    cfg.unit_map.scale_factor = f.number("scale_factor", cfg.unit_map.scale_factor, positive, "must be > 0");
    cfg.unit_map.molecular_time_unit = f.string("molecular_time_unit", cfg.unit_map.molecular_time_unit);
    cfg.unit_map.simulator_time_unit = f.string("simulator_time_unit", cfg.unit_map.simulator_time_unit);
    f.warn_unknown();
  }

  // noise
  {
    Fields f(top.child("noise"), "noise", r);
    top.mark("noise");
    const std::string preset = f.string("preset", "none");
    if (preset == "fitted") {
      cfg.noise = NoiseSpec::fitted();
    } else if (preset != "none") {
      f.error(f.path("preset"), "expected one of: none, fitted");
    }
    NoiseSpec& n = cfg.noise;
    n.gamma_h = f.number("gamma_h", n.gamma_h, non_negative, "must be >= 0");
    if (f.has("tau_d")) {
      n.tau_d = f.number("tau_d", n.tau_d, positive, "must be > 0 (omit for no dephasing)");
    } else {
      f.mark("tau_d");
    }
    n.d_delta = kTwoPi * f.number("d_delta_Hz_per_s", n.d_delta / kTwoPi);
    n.nbar = f.number("nbar", n.nbar, non_negative, "must be >= 0");
    n.readout_error = f.number("readout_error", n.readout_error, [](double x) { return x >= 0.0 && x < 0.5; },
                               "must be in [0, 0.5)");
    f.warn_unknown();
  }

  // shots
  {
    Fields f(top.child("shots"), "shots", r);
    top.mark("shots");
    cfg.shots.shots_per_point = f.integer("per_point", cfg.shots.shots_per_point, at_least_one, "must be >= 1");
    cfg.shots.sampled = f.boolean("sampled", false);
    cfg.shots.measure_imaginary = f.boolean("measure_imaginary", true);
    f.warn_unknown();
  }

  // grid
  {
    Fields f(top.child("grid"), "grid", r);
    top.mark("grid");
    cfg.grid.t_max = f.number("t_max_s", cfg.grid.t_max, positive, "must be > 0");
    cfg.grid.points = f.integer("points", cfg.grid.points, at_least_two, "must be >= 2");
    cfg.grid.method = f.choice("method", cfg.grid.method, kMethods);
    cfg.grid.slices_per_step = f.integer("slices_per_step", cfg.grid.slices_per_step, at_least_one, "must be >= 1");
    f.warn_unknown();
  }

  // spectrum
  {
    Fields f(top.child("spectrum"), "spectrum", r);
    top.mark("spectrum");
    SpectrumConfig& s = cfg.spectrum;
    s.method = f.choice("method", s.method, kSpectrumMethods);
    s.order = f.integer("order", s.order, non_negative, "must be >= 0 (0 selects half the samples)");
    s.theta = kTwoPi * f.number("theta_Hz", s.theta / kTwoPi);
    s.epsilon = kTwoPi * f.number("epsilon_Hz", 0.0);
    s.window_tau = f.number("window_tau_s", s.window_tau, non_negative, "must be >= 0 (0 disables)");
    s.points = f.integer("points", s.points, at_least_two, "must be >= 2");
    s.axis = f.choice("axis", s.axis, kAxes);
    if (f.has("freq_min_Hz")) s.freq_min = kTwoPi * f.number("freq_min_Hz", 0.0);
    if (f.has("freq_max_Hz")) s.freq_max = kTwoPi * f.number("freq_max_Hz", 0.0);
    f.mark("freq_min_Hz");
    f.mark("freq_max_Hz");
    f.warn_unknown();
    if (s.freq_min.has_value() != s.freq_max.has_value()) {
      f.error(f.path("freq_max_Hz"), "freq_min_Hz and freq_max_Hz must be given together");
    } else if (s.freq_min && !(*s.freq_max > *s.freq_min)) {
      f.error(f.path("freq_max_Hz"), "must exceed freq_min_Hz");
    }
    if (s.order > 0 && s.order >= cfg.grid.points) {
      f.error(f.path("order"), "must be below grid.points (" + std::to_string(cfg.grid.points) + ")");
    }
  }

  // hilbert
  {
    Fields f(top.child("hilbert"), "hilbert", r);
    top.mark("hilbert");
    cfg.n_max = f.integer("n_max", cfg.n_max, at_least_two, "must be >= 2");
    f.warn_unknown();
  }

  // qvc options
  {
    Fields f(top.child("qvc"), "qvc", r);
    top.mark("qvc");
    cfg.qvc_options.initial_state = f.integer("initial_state", 0, non_negative, "must be >= 0");
    cfg.qvc_options.target_state = f.integer("target_state", 1, non_negative, "must be >= 0");
    f.warn_unknown();
    if (cfg.qvc) {
      const int d = cfg.qvc->num_states;
      if (cfg.qvc_options.initial_state >= d) f.error(f.path("initial_state"), "exceeds the number of states");
      if (cfg.qvc_options.target_state >= d) f.error(f.path("target_state"), "exceeds the number of states");
      if (cfg.experiment == Experiment::CircuitEquivalence && cfg.qvc_options.initial_state != 0) {
        f.error(f.path("initial_state"), "the reference-state circuit starts in state 0");
      }
    }
  }

  // calibration
  {
    Fields f(top.child("calibration"), "calibration", r);
    top.mark("calibration");
    CalibrationConfig& c = cfg.calibration;
    c.laser.eta = f.number("eta", c.laser.eta, [](double x) { return x > 0.0 && x < 1.0; }, "must be in (0, 1)");
    if (f.has("omega_s_Hz")) {
      const double ws = kTwoPi * f.number("omega_s_Hz", 0.0, non_negative, "must be >= 0");
      c.laser.Omega = 2.0 * ws / c.laser.eta;
    } else {
      f.mark("omega_s_Hz");
    }
    if (f.has("Omega_Hz")) c.laser.Omega = kTwoPi * f.number("Omega_Hz", 0.0, non_negative, "must be >= 0");
    f.mark("Omega_Hz");
    c.laser.phi_C = f.number("phi_C", 0.0);
    c.laser.phi_R = f.number("phi_R", 0.0);
    c.laser.phi_B = f.number("phi_B", 0.0);
    c.laser.delta = kTwoPi * f.number("delta_Hz", 0.0);
    c.pulse_time = f.number("pulse_time_s", c.pulse_time, positive, "must be > 0");
    const bool phase = cfg.experiment == Experiment::PhaseScan;
    const double def_lo = phase ? 0.0 : -kTwoPi * 5e3;
    const double def_hi = phase ? kTwoPi : kTwoPi * 5e3;
    const double unit = phase ? 1.0 : kTwoPi;
    c.scan_min = unit * f.number(phase ? "scan_min_rad" : "scan_min_Hz", def_lo / unit);
    c.scan_max = unit * f.number(phase ? "scan_max_rad" : "scan_max_Hz", def_hi / unit);
    f.mark(phase ? "scan_min_Hz" : "scan_min_rad");
    f.mark(phase ? "scan_max_Hz" : "scan_max_rad");
    c.scan_points = f.integer("scan_points", c.scan_points, at_least_two, "must be >= 2");
    c.shots = f.integer("shots", 0, non_negative, "must be >= 0 (0 keeps exact populations)");
    c.beta = f.number("beta", c.beta, non_negative, "must be >= 0");
    c.zeta = f.number("zeta", c.zeta, non_negative, "must be >= 0");
    c.t_max = f.number("t_max_s", c.t_max, positive, "must be > 0");
    c.points = f.integer("points", c.points, [](double x) { return x >= 10; }, "must be >= 10");
    c.n_max = f.integer("n_max", c.n_max, at_least_two, "must be >= 2");
    f.warn_unknown();
    if (is_calibration(cfg.experiment) && !(c.scan_max > c.scan_min) && cfg.experiment != Experiment::DisplacementFit) {
      f.error(f.path("scan_max"), "must exceed scan_min");
    }
  }

  cfg.workers = top.integer("workers", 0, non_negative, "must be >= 0 (0 uses all cores)");
  if (top.has("seed")) {
    const json& s = doc["seed"];
    top.mark("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      top.error("seed", "expected a non-negative integer");
    } else {
      cfg.seed = s.get<std::uint64_t>();
    }
  } else {
    top.mark("seed");
  }
  cfg.output_dir = top.string("output_dir", "out");
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  if (!output_dir_writable(cfg.output_dir)) top.error("output_dir", "not writable: " + cfg.output_dir.string());
  top.mark("version");
  top.warn_unknown();

  // Cross-module preconditions.
  auto module_check = [&](const char* where, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      r.errors.push_back(std::string(where) + ": " + e.what());
    }
  };
  if (!is_calibration(cfg.experiment)) {
    module_check("noise", [&] { cfg.noise.validate(); });
    module_check("so2", [&] { cfg.so2.validate(); });
    if (cfg.shots.sampled) module_check("shots", [&] { cfg.shots.validate(); });
  } else {
    module_check("calibration", [&] { cfg.calibration.laser.validate(); });
  }
  if (needs_qvc && !cfg.noise.is_noiseless()) {
    r.warnings.push_back("noise: ignored by " + experiment_name(cfg.experiment) + " (noiseless circuits)");
  }
  if (cfg.grid.method == PropagationMethod::Trotter && !cfg.noise.is_noiseless()) {
    r.errors.push_back("grid.method: trotter requires noiseless dynamics");
  }

  // Truncation checks.
  if (cfg.noise.nbar > 0.0) {
    const double ratio = cfg.noise.nbar / (cfg.noise.nbar + 1.0);
    const double tail = std::pow(ratio, cfg.n_max + 1);
    if (tail >= 1e-8) {
      std::ostringstream os;
      os << "noise.nbar=" << cfg.noise.nbar << " too large for hilbert.n_max=" << cfg.n_max
         << " (thermal tail " << tail << " >= 1e-8)";
      r.warnings.push_back(os.str());
    }
  }
  if (cfg.experiment == Experiment::So2Fig4) {
    const double mean = cfg.so2.alpha * cfg.so2.alpha / 4.0;
    const int need = poisson_cutoff(mean, 1e-6);
    if (cfg.n_max < need) {
      std::ostringstream os;
      os << "so2.alpha=" << cfg.so2.alpha << " needs hilbert.n_max >= " << need << " (got " << cfg.n_max << ")";
      r.warnings.push_back(os.str());
    }
  }
  if (experiment_uses_spectrum(cfg.experiment) && cfg.spectrum.window_tau == 0.0 &&
      cfg.spectrum.method == SpectrumMethod::DFT) {
    r.warnings.push_back("spectrum.window_tau: no window; DFT of a truncated trace rings");
  }

  if (r.ok() && out) {
    *out = std::move(cfg);
  }
  return r;
}

ValidationReport load_config(const fs::path& path, RunConfig* out) {
  ValidationReport r;
  std::ifstream in(path);
  if (!in) {
    r.errors.push_back("config: cannot read " + path.string());
    return r;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    r.errors.push_back(std::string("config: invalid JSON: ") + e.what());
    return r;
  }
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  r = parse_config(doc, base, out);
  if (r.ok() && out) out->config_path = path;
  return r;
}

nlohmann::ordered_json RunConfig::resolved() const {
  ojson j;
  j["experiment"] = experiment_name(experiment);
  if (molecule_file) j["molecule_file"] = molecule_file->string();
  j["so2"] = {{"omega_b_Hz", so2.omega_b / kTwoPi},
              {"alpha", so2.alpha},
              {"delta_E_Hz", so2.delta_E / kTwoPi},
              {"omega_ground_Hz", so2.omega_ground / kTwoPi}};
  if (qvc) {
    j["qvc_model"] = {{"states", qvc->num_states}, {"modes", qvc->num_modes()}};
  }
  j["unit_map"] = {{"scale_factor", unit_map.scale_factor},
                   {"molecular_time_unit", unit_map.molecular_time_unit},
                   {"simulator_time_unit", unit_map.simulator_time_unit}};
  ojson noise_j;
  noise_j["gamma_h"] = noise.gamma_h;
  if (std::isfinite(noise.tau_d)) {
    noise_j["tau_d"] = noise.tau_d;
  } else {
    noise_j["tau_d"] = nullptr;
  }
  noise_j["d_delta_Hz_per_s"] = noise.d_delta / kTwoPi;
  noise_j["nbar"] = noise.nbar;
  noise_j["readout_error"] = noise.readout_error;
  j["noise"] = noise_j;
  j["shots"] = {{"per_point", shots.shots_per_point},
                {"sampled", shots.sampled},
                {"measure_imaginary", shots.measure_imaginary}};
  j["grid"] = {{"t_max_s", grid.t_max},
               {"points", grid.points},
               {"method", name_of(grid.method, kMethods)},
               {"slices_per_step", grid.slices_per_step}};
  j["spectrum"] = {{"method", name_of(spectrum.method, kSpectrumMethods)},
                   {"order", spectrum.order},
                   {"theta_Hz", spectrum.theta / kTwoPi},
                   {"epsilon_Hz", spectrum.epsilon / kTwoPi},
                   {"window_tau_s", spectrum.window_tau},
                   {"points", spectrum.points},
                   {"axis", name_of(spectrum.axis, kAxes)}};
  if (spectrum.freq_min) {
    j["spectrum"]["freq_min_Hz"] = *spectrum.freq_min / kTwoPi;
    j["spectrum"]["freq_max_Hz"] = *spectrum.freq_max / kTwoPi;
  }
  j["hilbert"] = {{"n_max", n_max}};
  j["qvc"] = {{"initial_state", qvc_options.initial_state}, {"target_state", qvc_options.target_state}};
  const CalibrationConfig& c = calibration;
  const bool phase = experiment == Experiment::PhaseScan;
  const double unit = phase ? 1.0 : kTwoPi;
  ojson cal;
  cal["eta"] = c.laser.eta;
  cal["Omega_Hz"] = c.laser.Omega / kTwoPi;
  cal["omega_s_Hz"] = c.laser.omega_s() / kTwoPi;
  cal["phi_C"] = c.laser.phi_C;
  cal["phi_R"] = c.laser.phi_R;
  cal["phi_B"] = c.laser.phi_B;
  cal["delta_Hz"] = c.laser.delta / kTwoPi;
  cal["pulse_time_s"] = c.pulse_time;
  cal[phase ? "scan_min_rad" : "scan_min_Hz"] = c.scan_min / unit;
  cal[phase ? "scan_max_rad" : "scan_max_Hz"] = c.scan_max / unit;
  cal["scan_points"] = c.scan_points;
  cal["shots"] = c.shots;
  cal["beta"] = c.beta;
  cal["zeta"] = c.zeta;
  cal["t_max_s"] = c.t_max;
  cal["points"] = c.points;
  cal["n_max"] = c.n_max;
  j["calibration"] = cal;
  j["workers"] = workers;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  return j;
}

}  // namespace vibronic_td
