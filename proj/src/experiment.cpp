#include "vibronic_td/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "vibronic_td/parallel.hpp"

namespace vibronic_td {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string dat_table(const std::string& header, const std::vector<std::vector<double>>& cols) {
  std::ostringstream os;
  os << "# " << header << "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? " " : "") << fmt(cols[c][r]);
    os << "\n";
  }
  return os.str();
}

std::string csv_table(const std::string& header, const std::vector<std::vector<double>>& cols) {
  std::ostringstream os;
  os << header << "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << fmt(cols[c][r]);
    os << "\n";
  }
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* method_name(SpectrumMethod m) { return m == SpectrumMethod::FPA ? "fpa" : "dft"; }

ojson spectrum_metadata(const SpectrumResult& s) {
  ojson j;
  j["method"] = method_name(s.method);
  j["order"] = s.order;
  j["numerator_degree"] = s.numerator_degree;
  j["denominator_degree"] = s.denominator_degree;
  j["theta_rad_s"] = s.theta;
  j["epsilon_rad_s"] = s.epsilon;
  if (s.window_tau) {
    j["window_tau_s"] = *s.window_tau;
  } else {
    j["window_tau_s"] = nullptr;
  }
  j["frame"] = s.frame == AxisFrame::Simulator ? "simulator" : "molecular";
  j["scale_factor"] = s.scale_factor;
  j["delta_E_rad_s"] = s.delta_E;
  j["points"] = s.size();
  j["spacing_rad_s"] = s.spacing();
  j["pole_warning"] = s.pole_warning;
  j["warnings"] = s.warnings;
  return j;
}

std::vector<double> frequency_grid(const RunConfig& cfg, const Autocorrelation& a) {
  if (cfg.spectrum.freq_min) return linspace(*cfg.spectrum.freq_min, *cfg.spectrum.freq_max, cfg.spectrum.points);
  return default_frequency_grid(a.dt(), cfg.spectrum.points);
}

SpectrumResult compute_spectrum(const RunConfig& cfg, const Autocorrelation& a) {
  Autocorrelation w = cfg.spectrum.window_tau > 0.0 ? apply_window(a, cfg.spectrum.window_tau) : a;
  const std::vector<double> grid = frequency_grid(cfg, a);
  ReconstructionOptions ro;
  ro.method = cfg.spectrum.method;
  ro.theta = cfg.spectrum.theta;
  ro.fpa.order = cfg.spectrum.order;
  const double eps = cfg.unit_map.to_simulator_frequency(cfg.spectrum.epsilon);
  SpectrumResult s;
  if (!a.has_imaginary) {
    s = reconstruct_from_real(w, eps, grid, ro);
  } else if (eps != 0.0) {
    s = shifted_full_spectrum(w, eps, grid, ro);
  } else if (cfg.spectrum.method == SpectrumMethod::FPA) {
    s = fourier_pade(w, cfg.spectrum.theta, grid, ro.fpa);
  } else {
    s = dft_spectrum(w, grid);
  }
  return s;
}

StickSpectrum sticks_to_frame(const StickSpectrum& s, const RunConfig& cfg, double delta_E) {
  if (cfg.spectrum.axis == AxisFrame::Simulator) return s;
  StickSpectrum out = s;
  for (auto& [w, p] : out.lines) w = cfg.unit_map.to_molecular_frequency(w) + delta_E;
  return out;
}

void write_spectral_outputs(ArtifactSet& art, const RunConfig& cfg, const Autocorrelation& a,
                            const StickSpectrum& sticks_sim, double delta_E, ojson& results) {
  art.write("autocorrelation.csv", a.to_csv());
  std::vector<double> re(a.size()), im(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    re[k] = a.values[k].real();
    im[k] = a.values[k].imag();
  }
  art.write("plotdata/autocorrelation.dat", dat_table("t_simulator_s re im", {a.t, re, im}));

  SpectrumResult s = compute_spectrum(cfg, a);
  if (cfg.spectrum.axis == AxisFrame::Molecular) s = restore_axis(s, cfg.unit_map, delta_E);
  for (const auto& w : s.warnings) warn(w);
  art.write("spectrum.csv", s.to_csv());
  art.write("spectrum.json", spectrum_metadata(s).dump(2) + "\n");
  art.write("plotdata/spectrum.dat", dat_table("omega_rad_s intensity normalized", {s.freq, s.intensity,
                                                                                    normalized_max(s)}));
  const StickSpectrum sticks = sticks_to_frame(sticks_sim, cfg, delta_E);
  art.write("sticks.csv", sticks.to_csv());
  std::vector<double> sw, sp;
  for (const auto& [w, p] : sticks.lines) {
    sw.push_back(w);
    sp.push_back(p);
  }
  art.write("plotdata/sticks.dat", dat_table("frequency_rad_s weight", {sw, sp}));

  ojson peaks = ojson::array();
  for (std::size_t idx : local_maxima(s, 1e-2)) peaks.push_back({{"omega_rad_s", s.freq[idx]}, {"intensity", s.intensity[idx]}});
  results["spectrum_peaks"] = peaks;
  results["pole_warning"] = s.pole_warning;
}

ojson run_so2(const RunConfig& cfg, ArtifactSet& art) {
  PropagationPlan plan;
  plan.t_grid = PropagationPlan::uniform_grid(cfg.grid.t_max, cfg.grid.points);
  plan.method = cfg.grid.method;
  plan.slices_per_step = cfg.grid.slices_per_step;
  ShotPlan shots = cfg.shots;
  shots.rng_seed = cfg.seed;
  So2RunOptions opts;
  opts.n_max = cfg.n_max;
  opts.workers = cfg.workers;
  Autocorrelation a = run_so2_sequence(cfg.so2, cfg.unit_map, cfg.noise, plan, shots, opts);

  ojson results;
  const SimulatorFrequencies f = map_units(cfg.so2, cfg.unit_map);
  results["delta_rad_s"] = f.delta;
  results["omega_s_rad_s"] = f.omega_s;
  results["displacement_duration_s"] = so2_displacement_duration(cfg.so2, cfg.unit_map);
  write_spectral_outputs(art, cfg, a, so2_sticks(cfg.so2, cfg.unit_map, cfg.n_max), cfg.so2.delta_E, results);
  return results;
}

Autocorrelation qvc_autocorrelation(const RunConfig& cfg, const QvcSetup& q) {
  const std::vector<double> t = PropagationPlan::uniform_grid(cfg.grid.t_max, cfg.grid.points);
  AncillaCircuit circuit(q.H, q.H0, q.mu, q.psi0);
  const bool im = cfg.shots.measure_imaginary;
  std::vector<double> re(t.size()), imv(t.size(), 0.0);
  parallel_for(t.size() * (im ? 2 : 1), cfg.workers, [&](std::size_t job) {
    const std::size_t k = job % t.size();
    const Part part = job < t.size() ? Part::Re : Part::Im;
    double e = circuit.run(t[k], part);
    if (cfg.shots.sampled) {
      std::mt19937_64 rng = job_rng(cfg.seed, k, part);
      e = sample_shots(e, cfg.shots.shots_per_point, cfg.noise.readout_error, rng);
    }
    (part == Part::Re ? re : imv)[k] = e;
  });
  std::vector<cplx> v(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) v[k] = {re[k], imv[k]};
  Autocorrelation a = Autocorrelation::exact(t, std::move(v), cfg.unit_map);
  a.has_imaginary = im;
  if (cfg.shots.sampled) {
    a.kind = AutocorrelationKind::Sampled;
    a.shots = cfg.shots.shots_per_point;
    const int n = cfg.shots.shots_per_point;
    a.re_stderr.resize(t.size());
    a.im_stderr.assign(t.size(), 0.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      a.re_stderr[k] = std::sqrt(std::max(0.0, 1.0 - re[k] * re[k]) / n);
      if (im) a.im_stderr[k] = std::sqrt(std::max(0.0, 1.0 - imv[k] * imv[k]) / n);
    }
  }
  return a;
}

ojson run_qvc(const RunConfig& cfg, ArtifactSet& art) {
  const QvcSetup q = make_qvc_setup(*cfg.qvc, cfg.n_max, cfg.qvc_options.initial_state, cfg.qvc_options.target_state,
                                    cfg.unit_map.scale_factor);
  Autocorrelation a = qvc_autocorrelation(cfg, q);
  ojson results;
  results["hilbert_dim"] = q.spec.dim();
  const StickSpectrum sticks = eigen_stick_spectrum(q.H, q.mu, q.psi0);
  results["stick_total_weight"] = sticks.total_weight();
  write_spectral_outputs(art, cfg, a, sticks, cfg.qvc->delta_E, results);
  return results;
}

ojson run_circuit_equivalence(const RunConfig& cfg, ArtifactSet& art) {
  const QvcSetup q = make_qvc_setup(*cfg.qvc, cfg.n_max, 0, cfg.qvc_options.target_state, cfg.unit_map.scale_factor);
  const std::vector<double> t = PropagationPlan::uniform_grid(cfg.grid.t_max, cfg.grid.points);
  AncillaCircuit anc(q.H, q.H0, q.mu, q.psi0);
  const OperatorMatrix Hx = expand_with_reference(q.H, q.block, 0.0);
  ReferenceCircuit ref(Hx, expand_dipole(q.mu), q.A_init);
  std::vector<double> ar(t.size()), ai(t.size()), rr(t.size()), ri(t.size()), dev(t.size());
  parallel_for(t.size(), cfg.workers, [&](std::size_t k) {
    const cplx x = anc.autocorrelation(t[k]);
    const cplx y = ref.autocorrelation(t[k]);
    ar[k] = x.real();
    ai[k] = x.imag();
    rr[k] = y.real();
    ri[k] = y.imag();
    dev[k] = std::abs(x - y);
  });
  std::vector<cplx> v(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) v[k] = {ar[k], ai[k]};
  art.write("autocorrelation.csv", Autocorrelation::exact(t, v, cfg.unit_map).to_csv());
  art.write("circuits.csv", csv_table("t_simulator_s,ancilla_re,ancilla_im,reference_re,reference_im,abs_diff",
                                      {t, ar, ai, rr, ri, dev}));
  art.write("plotdata/circuits.dat",
            dat_table("t_simulator_s ancilla_re ancilla_im reference_re reference_im abs_diff", {t, ar, ai, rr, ri, dev}));
  ojson results;
  results["max_abs_difference"] = *std::max_element(dev.begin(), dev.end());
  results["hilbert_dim"] = q.spec.dim();
  return results;
}

ojson write_scan(ArtifactSet& art, const std::string& x_name, const std::vector<ScanPoint>& pts) {
  std::vector<double> x, p, e;
  for (const auto& s : pts) {
    x.push_back(s.x);
    p.push_back(s.p1);
    e.push_back(s.stderr);
  }
  art.write("scan.csv", csv_table(x_name + ",p1,stderr", {x, p, e}));
  art.write("plotdata/scan.dat", dat_table(x_name + " p1 stderr", {x, p, e}));
  const auto it = std::min_element(pts.begin(), pts.end(), [](const ScanPoint& a, const ScanPoint& b) {
    return a.p1 < b.p1;
  });
  ojson j;
  j["argmin"] = it->x;
  j["min_p1"] = it->p1;
  j["scan_step"] = pts.size() > 1 ? pts[1].x - pts[0].x : 0.0;
  return j;
}

std::vector<ScanPoint> maybe_sample(const RunConfig& cfg, std::vector<ScanPoint> pts) {
  if (cfg.calibration.shots > 0) return sample_scan(pts, cfg.calibration.shots, cfg.seed);
  return pts;
}

ojson run_detuning(const RunConfig& cfg, ArtifactSet& art) {
  const CalibrationConfig& c = cfg.calibration;
  const std::vector<double> offsets = linspace(c.scan_min, c.scan_max, c.scan_points);
  auto pts = maybe_sample(cfg, detuning_scan(c.laser, offsets, c.pulse_time, {c.n_max, cfg.workers}));
  ojson results = write_scan(art, "offset_rad_s", pts);
  art.write("fit.json", results.dump(2) + "\n");
  return results;
}

ojson run_phase(const RunConfig& cfg, ArtifactSet& art) {
  const CalibrationConfig& c = cfg.calibration;
  const std::vector<double> phases = linspace(c.scan_min, c.scan_max, c.scan_points);
  auto pts = maybe_sample(cfg, phase_scan(c.laser, phases, c.pulse_time, {c.n_max, cfg.workers}));
  ojson results = write_scan(art, "phase_rad", pts);
  std::vector<double> x, y;
  for (const auto& s : pts) {
    x.push_back(s.x);
    y.push_back(s.p1);
  }
  const FitResult fit = fit_sinusoid(x, y);
  ojson fj = ojson::parse(fit.to_json());
  // Minimum of offset + A cos(2 pi x / P - phase) for A > 0.
  const double P = fit.params.at("period");
  double xmin = (fit.params.at("phase") + std::numbers::pi) * P / (2.0 * std::numbers::pi);
  if (fit.params.at("amplitude") < 0.0) xmin -= P / 2.0;
  xmin = std::fmod(std::fmod(xmin - c.scan_min, P) + P, P) + c.scan_min;
  fj["calibrated_phase"] = xmin;
  results["fit"] = fj;
  art.write("fit.json", fj.dump(2) + "\n");
  return results;
}

ojson run_displacement(const RunConfig& cfg, ArtifactSet& art) {
  const CalibrationConfig& c = cfg.calibration;
  const std::vector<double> t = linspace(0.0, c.t_max, c.points);
  const std::vector<double> p = coherent_bsb_population(t, c.laser.Omega, c.laser.eta, c.beta, c.zeta,
                                                        bsb_k_max(c.beta * c.beta, 1e-12) + 2);
  std::vector<ScanPoint> pts(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) pts[k] = {t[k], p[k], 0.0};
  pts = maybe_sample(cfg, pts);
  ojson results = write_scan(art, "t_s", pts);
  std::vector<std::pair<double, double>> data;
  for (const auto& s : pts) data.emplace_back(s.x, s.p1);
  const FitResult fit = fit_displacement(data, c.laser);
  ojson fj = ojson::parse(fit.to_json());
  fj["true_beta"] = c.beta;
  fj["true_zeta"] = c.zeta;
  const std::vector<double> model = coherent_bsb_population(
      t, c.laser.Omega, c.laser.eta, fit.params.at("beta"), fit.params.at("zeta"),
      bsb_k_max(fit.params.at("beta") * fit.params.at("beta"), 1e-12) + 2);
  art.write("plotdata/fit.dat", dat_table("t_s p1_fit", {t, model}));
  art.write("fit.json", fj.dump(2) + "\n");
  results["fit"] = fj;
  return results;
}

}  // namespace

const char* tool_version() { return VIBRONIC_TD_VERSION; }

QvcSetup make_qvc_setup(const QvcModel& model, int n_max, int initial_state, int target_state, double scale_factor) {
  model.validate();
  if (initial_state < 0 || initial_state >= model.num_states || target_state < 0 ||
      target_state >= model.num_states) {
    throw DomainError("initial/target state out of range");
  }
  if (initial_state == target_state) throw DomainError("initial and target states must differ");
  const HilbertSpec spec = model.hilbert_spec(n_max);
  const OperatorMatrix H(build_qvc_hamiltonian(model, spec).matrix() * scale_factor, spec, true);
  const Matrix block = electronic_block(H, initial_state);
  const Matrix id = Matrix::Identity(spec.qudit_dim, spec.qudit_dim);
  const OperatorMatrix H0 = qudit_tensor_modes(spec, id, block, true);
  const OperatorMatrix mu(
      (qudit_projector(spec, target_state, initial_state) + qudit_projector(spec, initial_state, target_state)).matrix(),
      spec, true);

  Eigen::SelfAdjointEigenSolver<Matrix> es(block);
  const Matrix g = es.eigenvectors().col(0);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix A = qr.householderQ() * Matrix::Identity(g.rows(), g.rows());
  // Align the phase so that A e_0 = g exactly.
  const cplx ph = A.col(0).dot(g.col(0));
  A.col(0) *= ph / std::abs(ph);
  Vector psi = Vector::Zero(spec.dim());
  psi.segment(initial_state * spec.mode_dim(), spec.mode_dim()) = g.col(0);
  QvcSetup q{spec, H, H0, block, mu, QuantumState::pure(spec, psi), A};
  return q;
}

StickSpectrum so2_sticks(const So2Params& p, const UnitMap& u, int n_max) {
  const QvcModel model = p.to_qvc();
  const HilbertSpec spec = model.hilbert_spec(n_max);
  const double F = u.scale_factor;
  const OperatorMatrix H(build_qvc_hamiltonian(model, spec).matrix() * F, spec, true);
  const OperatorMatrix mu(
      (qudit_projector(spec, 0, 1) + qudit_projector(spec, 1, 0)).matrix(), spec, true);
  const QuantumState psi0 = basis_state(spec, 1, {0});
  StickSpectrum s = eigen_stick_spectrum(H, mu, psi0);
  // Reorganization and electronic offsets of the D0 block.
  const double shift = p.alpha * p.alpha * F * p.omega_b - F * p.delta_E;
  for (auto& [w, wt] : s.lines) w += shift;
  return s;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void ArtifactSet::write(const std::string& rel, const std::string& content) {
  const fs::path p = root / rel;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw NumericalError("cannot write " + p.string());
  if (std::find(files.begin(), files.end(), rel) == files.end()) files.push_back(rel);
}

ojson run_experiment(const RunConfig& cfg) {
  ArtifactSet art{cfg.output_dir, {}};
  fs::create_directories(cfg.output_dir);
  ojson results;
  switch (cfg.experiment) {
    case Experiment::So2Fig4: results = run_so2(cfg, art); break;
    case Experiment::QvcSpectrum: results = run_qvc(cfg, art); break;
    case Experiment::CircuitEquivalence: results = run_circuit_equivalence(cfg, art); break;
    case Experiment::DetuningScan: results = run_detuning(cfg, art); break;
    case Experiment::PhaseScan: results = run_phase(cfg, art); break;
    case Experiment::DisplacementFit: results = run_displacement(cfg, art); break;
  }

  ojson manifest;
  manifest["tool"] = "vibronic-td";
  manifest["version"] = tool_version();
  manifest["created_utc"] = utc_timestamp();
  manifest["experiment"] = experiment_name(cfg.experiment);
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.resolved();
  ojson inputs = ojson::array();
  if (!cfg.config_path.empty()) {
    inputs.push_back({{"role", "config"}, {"path", cfg.config_path.string()}, {"sha256", sha256_file(cfg.config_path)}});
  }
  if (cfg.molecule_file) {
    inputs.push_back(
        {{"role", "molecule"}, {"path", cfg.molecule_file->string()}, {"sha256", sha256_file(*cfg.molecule_file)}});
  }
  manifest["inputs"] = inputs;
  ojson outputs = ojson::array();
  for (const auto& rel : art.files) outputs.push_back({{"path", rel}, {"sha256", sha256_file(art.root / rel)}});
  manifest["outputs"] = outputs;
  manifest["results"] = results;
  std::ofstream out(cfg.output_dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  if (!out) throw NumericalError("cannot write manifest.json");
  return results;
}

int command_validate(const fs::path& config, std::ostream& out, std::ostream& err) {
  const ValidationReport r = load_config(config, nullptr);
  (r.ok() ? out : err) << r.text();
  return r.ok() ? kExitOk : kExitConfig;
}

int command_run(const fs::path& config, const std::optional<fs::path>& output_dir,
                const std::optional<std::uint64_t>& seed, bool validate_only, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  ValidationReport r;
  try {
    r = load_config(config, &cfg);
  } catch (const std::exception& e) {
    r.errors.push_back(e.what());
  }
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  if (!r.ok()) {
    for (const auto& e : r.errors) err << "error: " << e << "\n";
    return kExitConfig;
  }
  if (output_dir) cfg.output_dir = *output_dir;
  if (seed) cfg.seed = *seed;
  if (validate_only) {
    out << "configuration OK\n";
    return kExitOk;
  }
  try {
    run_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  out << "wrote " << (cfg.output_dir / "manifest.json").string() << "\n";
  return kExitOk;
}

}  // namespace vibronic_td
