#include "vibronic_td/vibronic_model.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace vibronic_td {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_hermitian(const Matrix& m, const std::string& what, double tol) {
  if (max_abs(m - m.adjoint()) > tol * std::max(1.0, max_abs(m))) {
    throw DomainError(what + " is not Hermitian in (n, m)");
  }
}

cplx parse_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw ConfigError(where + ": expected a number or [re, im]");
}

Matrix parse_state_matrix(const json& v, int d, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != d) {
    throw ConfigError(where + ": expected " + std::to_string(d) + " rows");
  }
  Matrix m(d, d);
  for (int n = 0; n < d; ++n) {
    if (!v[n].is_array() || static_cast<int>(v[n].size()) != d) {
      throw ConfigError(where + "[" + std::to_string(n) + "]: expected " + std::to_string(d) +
                        " entries");
    }
    for (int k = 0; k < d; ++k) {
      m(n, k) = kTwoPi * parse_complex(v[n][k], where + "[" + std::to_string(n) + "][" +
                                                    std::to_string(k) + "]");
    }
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// QvcModel

QvcModel QvcModel::zeros(int num_states, std::vector<double> mode_freqs) {
  QvcModel m;
  m.num_states = num_states;
  m.mode_freqs = std::move(mode_freqs);
  const int n = m.num_modes();
  m.c0 = Matrix::Zero(num_states, num_states);
  m.c1.assign(n, Matrix::Zero(num_states, num_states));
  m.c2.assign(n, std::vector<Matrix>(n, Matrix::Zero(num_states, num_states)));
  return m;
}

void QvcModel::validate(double tol) const {
  if (num_states < 1) throw DomainError("QVC model needs at least one electronic state");
  for (double w : mode_freqs) {
    if (!(w > 0.0)) throw DomainError("mode frequencies must be > 0");
  }
  const int n = num_modes();
  const int d = num_states;
  if (c0.rows() != d || c0.cols() != d) throw DomainError("c0 must be d x d");
  if (static_cast<int>(c1.size()) != n) throw DomainError("c1 must have one entry per mode");
  if (static_cast<int>(c2.size()) != n) throw DomainError("c2 must have one row per mode");
  require_hermitian(c0, "c0", tol);
  for (int j = 0; j < n; ++j) {
    if (c1[j].rows() != d || c1[j].cols() != d) throw DomainError("c1 blocks must be d x d");
    require_hermitian(c1[j], "c1", tol);
    if (static_cast<int>(c2[j].size()) != n) throw DomainError("c2 must be N x N");
    for (int k = 0; k < n; ++k) {
      if (c2[j][k].rows() != d || c2[j][k].cols() != d) throw DomainError("c2 blocks must be d x d");
      require_hermitian(c2[j][k], "c2", tol);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if (max_abs(c2[j][k] - c2[k][j]) > tol * std::max(1.0, max_abs(c2[j][k]))) {
        throw DomainError("c2 must be symmetric in the mode indices");
      }
    }
  }
}

HilbertSpec QvcModel::hilbert_spec(int n_max) const {
  return HilbertSpec(num_states, std::vector<int>(num_modes(), n_max), false);
}

// ---------------------------------------------------------------------------
// So2Params / UnitMap

So2Params So2Params::standard() {
  So2Params p;
  p.omega_b = kTwoPi * 12.44e12;
  p.alpha = 1.716;
  return p;
}

void So2Params::validate() const {
  if (!(omega_b > 0.0)) throw DomainError("omega_b must be > 0");
  if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
}

QvcModel So2Params::to_qvc() const {
  validate();
  QvcModel m = QvcModel::zeros(2, {omega_b});
  m.c1[0](0, 0) = -std::sqrt(2.0) * omega_b * alpha;
  m.c0(0, 0) = delta_E;
  return m;
}

UnitMap UnitMap::standard() {
  UnitMap u;
  u.scale_factor = 1.37e-10;
  u.molecular_time_unit = "fs";
  u.simulator_time_unit = "ms";
  return u;
}

void UnitMap::validate() const {
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor)) {
    throw DomainError("unit scale factor F must be > 0");
  }
}

// ---------------------------------------------------------------------------
// Hamiltonians

Matrix free_mode_hamiltonian(const QvcModel& model, const HilbertSpec& spec) {
  const HilbertSpec modes = spec.modes_only();
  Matrix h = Matrix::Zero(modes.dim(), modes.dim());
  for (int j = 0; j < model.num_modes(); ++j) {
    h += model.mode_freqs[j] * number_operator(modes, j).matrix();
    if (model.zero_point_included) h += 0.5 * model.mode_freqs[j] * identity_matrix(modes.dim());
  }
  return h;
}

Matrix coupling_block(const QvcModel& model, const HilbertSpec& spec, int n, int m) {
  const HilbertSpec modes = spec.modes_only();
  const int N = model.num_modes();
  std::vector<Matrix> q;
  q.reserve(N);
  for (int j = 0; j < N; ++j) q.push_back(position_operator(modes, j).matrix());
  Matrix c = model.c0(n, m) * identity_matrix(modes.dim());
  for (int j = 0; j < N; ++j) {
    if (model.c1[j](n, m) != 0.0) c += model.c1[j](n, m) * q[j];
    for (int k = 0; k < N; ++k) {
      if (model.c2[j][k](n, m) != 0.0) c += model.c2[j][k](n, m) * (q[j] * q[k]);
    }
  }
  return c;
}

OperatorMatrix build_qvc_hamiltonian(const QvcModel& model, const HilbertSpec& spec) {
  model.validate();
  spec.validate();
  if (spec.has_reference) throw DomainError("QVC Hamiltonian is built without the reference level");
  if (spec.qudit_dim != model.num_states || spec.num_modes() != model.num_modes()) {
    throw DomainError("Hilbert space does not match the QVC model dimensions");
  }
  const Index md = spec.mode_dim();
  const int d = model.num_states;
  Matrix h0 = free_mode_hamiltonian(model, spec);
  Matrix h = Matrix::Zero(spec.dim(), spec.dim());
  for (int n = 0; n < d; ++n) {
    h.block(n * md, n * md, md, md) += h0;
    for (int m = 0; m < d; ++m) h.block(n * md, m * md, md, md) += coupling_block(model, spec, n, m);
  }
  // Remove rounding asymmetry from Q_j Q_k products.
  h = 0.5 * (h + h.adjoint()).eval();
  return OperatorMatrix(std::move(h), spec, true);
}

Matrix electronic_block(const OperatorMatrix& H, int level) {
  const HilbertSpec& spec = H.spec();
  if (level < 0 || level >= spec.qudit_dim) throw DomainError("electronic level out of range");
  const Index md = spec.mode_dim();
  return H.matrix().block(level * md, level * md, md, md);
}

OperatorMatrix expand_with_reference(const OperatorMatrix& H, const Matrix& H0, double epsilon) {
  const HilbertSpec& spec = H.spec();
  if (spec.has_reference) throw DomainError("Hamiltonian already includes a reference level");
  const Index md = spec.mode_dim();
  if (H0.rows() != md || H0.cols() != md) {
    throw DomainError("reference Hamiltonian must act on the mode space only");
  }
  HilbertSpec ext = spec.with_reference();
  const Index n = spec.dim();
  Matrix h = Matrix::Zero(ext.dim(), ext.dim());
  h.topLeftCorner(n, n) = H.matrix();
  h.bottomRightCorner(md, md) = H0 - epsilon * identity_matrix(md);
  return OperatorMatrix(std::move(h), ext, H.hermitian_hint());
}

So2Family build_so2_family(const So2Params& p, const HilbertSpec& spec, int check_levels) {
  p.validate();
  if (spec.qudit_dim != 2 || spec.num_modes() != 1 || spec.has_reference) {
    throw DomainError("SO2 family needs a qubit and one mode");
  }
  const double w = p.omega_b;
  const double a = p.alpha;
  QvcModel model = p.to_qvc();
  So2Family out;
  out.H_prime = build_qvc_hamiltonian(model, spec);

  OperatorMatrix n = number_operator(spec, 0);
  OperatorMatrix q = position_operator(spec, 0);
  OperatorMatrix sx = embed_qudit_operator(spec, pauli_x(), true);
  out.H_dprime = OperatorMatrix(w * n.matrix() + (w * a / std::sqrt(2.0)) * (sx.matrix() * q.matrix()),
                                spec, true);
  out.init_displacement = cplx(-a / 2.0, 0.0);
  out.reorganization_shift = -a * a * w;

  const int nm = spec.mode_truncations[0];
  const int levels = std::min(check_levels, nm);
  OperatorMatrix d = displacement_operator(spec, 0, out.init_displacement);
  Matrix without_dE = out.H_prime.matrix() - p.delta_E * qudit_projector(spec, 0, 0).matrix();
  Matrix ry_m = rotation_y(spec, -std::numbers::pi / 2).matrix();
  Matrix conj = ry_m * d.matrix() * without_dE * d.matrix().adjoint() * ry_m.adjoint();
  Matrix expected = out.H_dprime.matrix() + (w * a * a / 2.0) * sx.matrix() -
                    (w * a * a / 4.0) * identity_matrix(spec.dim());
  double resid = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      Matrix diff = (conj - expected).block(r * nm, c * nm, levels, levels);
      resid = std::max(resid, max_abs(diff));
    }
  }
  out.conjugation_residual = resid / w;
  return out;
}

SimulatorFrequencies map_units(const So2Params& p, const UnitMap& u) {
  p.validate();
  u.validate();
  SimulatorFrequencies f;
  f.delta = u.scale_factor * p.omega_b;
  f.omega_s = u.scale_factor * p.omega_b * p.alpha / 2.0;
  return f;
}

// ---------------------------------------------------------------------------
// Molecule files

QvcModel parse_molecule(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("molecule: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("molecule: expected an object");
  if (!j.contains("states") || !j["states"].is_number_integer() || j["states"].get<int>() < 1) {
    throw ConfigError("molecule.states: expected an integer >= 1");
  }
  const int d = j["states"].get<int>();
  if (!j.contains("modes") || !j["modes"].is_array()) {
    throw ConfigError("molecule.modes: expected an array of {omega_Hz}");
  }
  std::vector<double> freqs;
  for (std::size_t k = 0; k < j["modes"].size(); ++k) {
    const json& m = j["modes"][k];
    const std::string where = "molecule.modes[" + std::to_string(k) + "].omega_Hz";
    if (!m.is_object() || !m.contains("omega_Hz") || !m["omega_Hz"].is_number()) {
      throw ConfigError(where + ": expected a number");
    }
    const double hz = m["omega_Hz"].get<double>();
    if (!(hz > 0.0)) throw ConfigError(where + ": must be > 0");
    freqs.push_back(kTwoPi * hz);
  }
  const int N = static_cast<int>(freqs.size());
  QvcModel model = QvcModel::zeros(d, freqs);
  if (j.contains("c0")) model.c0 = parse_state_matrix(j["c0"], d, "molecule.c0");
  if (j.contains("c1")) {
    // c1[n][m][j]
    const json& c = j["c1"];
    if (!c.is_array() || static_cast<int>(c.size()) != d) throw ConfigError("molecule.c1: expected d rows");
    for (int n = 0; n < d; ++n) {
      if (!c[n].is_array() || static_cast<int>(c[n].size()) != d) {
        throw ConfigError("molecule.c1[" + std::to_string(n) + "]: expected d entries");
      }
      for (int m = 0; m < d; ++m) {
        const std::string where = "molecule.c1[" + std::to_string(n) + "][" + std::to_string(m) + "]";
        if (!c[n][m].is_array() || static_cast<int>(c[n][m].size()) != N) {
          throw ConfigError(where + ": expected one entry per mode");
        }
        for (int k = 0; k < N; ++k) {
          model.c1[k](n, m) = kTwoPi * parse_complex(c[n][m][k], where + "[" + std::to_string(k) + "]");
        }
      }
    }
  }
  if (j.contains("c2")) {
    // c2[n][m][j][k]
    const json& c = j["c2"];
    if (!c.is_array() || static_cast<int>(c.size()) != d) throw ConfigError("molecule.c2: expected d rows");
    for (int n = 0; n < d; ++n) {
      for (int m = 0; m < d; ++m) {
        const std::string where = "molecule.c2[" + std::to_string(n) + "][" + std::to_string(m) + "]";
        if (!c[n].is_array() || static_cast<int>(c[n].size()) != d || !c[n][m].is_array() ||
            static_cast<int>(c[n][m].size()) != N) {
          throw ConfigError(where + ": expected an N x N block");
        }
        for (int a = 0; a < N; ++a) {
          if (!c[n][m][a].is_array() || static_cast<int>(c[n][m][a].size()) != N) {
            throw ConfigError(where + ": expected an N x N block");
          }
          for (int b = 0; b < N; ++b) {
            model.c2[a][b](n, m) = kTwoPi * parse_complex(c[n][m][a][b], where);
          }
        }
      }
    }
  }
  if (j.contains("delta_E_Hz")) {
    if (!j["delta_E_Hz"].is_number()) throw ConfigError("molecule.delta_E_Hz: expected a number");
    model.delta_E = kTwoPi * j["delta_E_Hz"].get<double>();
  }
  if (j.contains("zero_point")) {
    if (!j["zero_point"].is_boolean()) throw ConfigError("molecule.zero_point: expected a boolean");
    model.zero_point_included = j["zero_point"].get<bool>();
  }
  try {
    model.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("molecule: ") + e.what());
  }
  return model;
}

QvcModel load_molecule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("molecule file not readable: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_molecule(os.str());
}

}  // namespace vibronic_td
