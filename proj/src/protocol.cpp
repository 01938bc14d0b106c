#include "vibronic_td/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "vibronic_td/parallel.hpp"

namespace vibronic_td {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::pair<double, Vector>> to_ensemble(const QuantumState& s) {
  std::vector<std::pair<double, Vector>> out;
  if (s.is_pure()) {
    out.emplace_back(1.0, s.vector());
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.density_matrix());
  for (Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p > 1e-14) out.emplace_back(p, es.eigenvectors().col(k));
  }
  return out;
}

// Two-level gate on (row blocks n, m) of a block vector with block size md.
void apply_pair_gate(Vector& psi, Index md, int n, int m, const Eigen::Matrix2cd& u) {
  Vector a = psi.segment(n * md, md);
  Vector b = psi.segment(m * md, md);
  psi.segment(n * md, md) = u(0, 0) * a + u(0, 1) * b;
  psi.segment(m * md, md) = u(1, 0) * a + u(1, 1) * b;
}

Eigen::Matrix2cd hadamard2() {
  Eigen::Matrix2cd h;
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

Eigen::Matrix2cd rx2(double theta) {
  return std::cos(theta / 2) * Eigen::Matrix2cd::Identity() - kI * std::sin(theta / 2) * pauli_x();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter types

void SdfParams::validate() const {
  if (!(omega_s >= 0.0) || !std::isfinite(omega_s)) throw DomainError("SDF omega_s must be >= 0");
  if (!std::isfinite(delta) || !std::isfinite(varphi)) throw DomainError("SDF parameters must be finite");
}

void ShotPlan::validate() const {
  if (shots_per_point < 1) throw DomainError("shots_per_point must be >= 1");
}

void Autocorrelation::validate() const {
  if (t.size() != values.size()) throw DomainError("autocorrelation times and values differ in length");
  if (!re_stderr.empty() && re_stderr.size() != t.size()) throw DomainError("re_stderr has wrong length");
  if (!im_stderr.empty() && im_stderr.size() != t.size()) throw DomainError("im_stderr has wrong length");
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw DomainError("autocorrelation times must be strictly increasing");
  }
}

bool Autocorrelation::uniform(double rel_tol) const {
  if (t.size() < 2) return false;
  const double h = (t.back() - t.front()) / (t.size() - 1);
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (std::abs((t[k] - t[k - 1]) - h) > rel_tol * h + 1e-15 * std::abs(t[k])) return false;
  }
  return true;
}

double Autocorrelation::dt() const {
  if (t.size() < 2) throw DomainError("autocorrelation needs at least 2 samples");
  return (t.back() - t.front()) / (t.size() - 1);
}

std::string Autocorrelation::to_csv() const {
  std::ostringstream os;
  os << "t_simulator_s,t_molecular_s,re,im,re_stderr,im_stderr\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double re_se = re_stderr.empty() ? 0.0 : re_stderr[k];
    const double im_se = im_stderr.empty() ? 0.0 : im_stderr[k];
    os << fmt(t[k]) << ',' << fmt(unit_map.to_molecular_time(t[k])) << ',' << fmt(values[k].real())
       << ',' << fmt(values[k].imag()) << ',' << fmt(re_se) << ',' << fmt(im_se) << '\n';
  }
  return os.str();
}

Autocorrelation Autocorrelation::exact(std::vector<double> t, std::vector<cplx> values, UnitMap u) {
  Autocorrelation a;
  a.t = std::move(t);
  a.values = std::move(values);
  a.unit_map = std::move(u);
  a.re_stderr.assign(a.t.size(), 0.0);
  a.im_stderr.assign(a.t.size(), 0.0);
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// SDF

OperatorMatrix build_sdf_hamiltonian(const SdfParams& p, const HilbertSpec& spec) {
  p.validate();
  if (spec.qudit_dim != 2 || spec.num_modes() != 1) throw DomainError("SDF Hamiltonian needs a qubit and one mode");
  Matrix n = number_operator(spec, 0).matrix();
  Matrix q = position_operator(spec, 0).matrix();
  Matrix pm = momentum_operator(spec, 0).matrix();
  Matrix sx = embed_qudit_operator(spec, pauli_x(), true).matrix();
  Matrix h = p.delta * n +
             std::sqrt(2.0) * p.omega_s * (sx * (std::cos(p.varphi) * q + std::sin(p.varphi) * pm));
  h = 0.5 * (h + h.adjoint()).eval();
  return OperatorMatrix(std::move(h), spec, true);
}

// ---------------------------------------------------------------------------
// Circuits

cplx direct_autocorrelation(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                            const QuantumState& psi0, double t) {
  UnitaryPropagator ph(H);
  UnitaryPropagator p0(H0);
  cplx acc = 0.0;
  for (const auto& [w, v] : to_ensemble(psi0)) {
    Vector x = mu.matrix() * p0.apply(v, t, -1);
    x = mu.matrix().adjoint() * ph.apply(x, t, 1);
    acc += w * v.dot(x);
  }
  return acc;
}

AncillaCircuit::AncillaCircuit(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                               const QuantumState& psi0, ImGatePlacement placement)
    : prop_h_(H), prop_h0_(H0), mu_(mu.matrix()), ensemble_(to_ensemble(psi0)), placement_(placement) {
  if (!(H.spec() == H0.spec()) || !(H.spec() == mu.spec()) || !(H.spec() == psi0.spec())) {
    throw DomainError("ancilla circuit operators act on different spaces");
  }
}

double AncillaCircuit::run_pure(const Vector& psi0, double t, Part part) const {
  const Index D = psi0.size();
  // State = |0>_a (x) block0 + |1>_a (x) block1.
  Vector psi(2 * D);
  psi.head(D) = psi0;
  psi.tail(D).setZero();
  // Backward evolution on the system.
  psi.head(D) = prop_h0_.apply(psi.head(D), t, -1);
  if (part == Part::Im && placement_ == ImGatePlacement::BeforeFirstHadamard) {
    apply_pair_gate(psi, D, 0, 1, rx2(-kPi / 2));
  }
  apply_pair_gate(psi, D, 0, 1, hadamard2());
  // Controlled mu.
  psi.tail(D) = mu_ * psi.tail(D);
  // Forward evolution conditioned on the ancilla.
  psi.head(D) = prop_h0_.apply(psi.head(D), t, 1);
  psi.tail(D) = prop_h_.apply(psi.tail(D), t, 1);
  // Controlled mu^+.
  psi.tail(D) = mu_.adjoint() * psi.tail(D);
  apply_pair_gate(psi, D, 0, 1, hadamard2());
  if (part == Part::Im && placement_ == ImGatePlacement::AfterFinalHadamard) {
    apply_pair_gate(psi, D, 0, 1, rx2(-kPi / 2));
  }
  return psi.head(D).squaredNorm() - psi.tail(D).squaredNorm();
}

double AncillaCircuit::run(double t, Part part) const {
  double acc = 0.0;
  for (const auto& [w, v] : ensemble_) acc += w * run_pure(v, t, part);
  return acc;
}

ReferenceCircuit::ReferenceCircuit(const OperatorMatrix& H_expanded, const OperatorMatrix& mu_prime,
                                   const Matrix& A_init)
    : spec_(H_expanded.spec()),
      prop_h_(H_expanded),
      prop_h0_(OperatorMatrix(H_expanded.matrix().topLeftCorner(spec_.mode_dim(), spec_.mode_dim()),
                              spec_.modes_only(), true)),
      mu_prime_(mu_prime.matrix()),
      a_init_(A_init) {
  if (!spec_.has_reference) throw DomainError("reference circuit needs a space with a reference level");
  if (!(mu_prime.spec() == spec_)) throw DomainError("mu' acts on a different space");
  if (A_init.rows() != spec_.mode_dim() || A_init.cols() != spec_.mode_dim()) {
    throw DomainError("A_init must act on the mode space");
  }
}

double ReferenceCircuit::run(double t, Part part) const {
  const Index md = spec_.mode_dim();
  const int ref = spec_.reference_level();
  Vector psi = Vector::Zero(spec_.dim());
  psi(0) = 1.0;
  apply_pair_gate(psi, md, 0, ref, hadamard2());
  // A_init and the backward H(0) segment act on the modes of both branches.
  Vector init = a_init_ * Vector::Unit(md, 0);
  init = prop_h0_.apply(init, t, -1);
  psi.segment(0, md) = psi(0) * init;
  psi.segment(ref * md, md) = psi(ref * md) * init;
  psi = mu_prime_ * psi;
  psi = prop_h_.apply(psi, t, 1);
  psi = mu_prime_.adjoint() * psi;
  apply_pair_gate(psi, md, 0, ref, hadamard2());
  if (part == Part::Im) apply_pair_gate(psi, md, 0, ref, rx2(kPi / 2));
  return psi.segment(0, md).squaredNorm() - psi.segment(ref * md, md).squaredNorm();
}

double run_ancilla_circuit(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                           const QuantumState& psi0, double t, Part part, ImGatePlacement placement) {
  return AncillaCircuit(H, H0, mu, psi0, placement).run(t, part);
}

double run_reference_circuit(const OperatorMatrix& H_expanded, const OperatorMatrix& mu_prime,
                             const Matrix& A_init, double t, Part part) {
  return ReferenceCircuit(H_expanded, mu_prime, A_init).run(t, part);
}

OperatorMatrix expand_dipole(const OperatorMatrix& mu) {
  const HilbertSpec& spec = mu.spec();
  HilbertSpec ext = spec.with_reference();
  const Index md = spec.mode_dim();
  Matrix m = Matrix::Zero(ext.dim(), ext.dim());
  m.topLeftCorner(spec.dim(), spec.dim()) = mu.matrix();
  m.bottomRightCorner(md, md) = identity_matrix(md);
  return OperatorMatrix(std::move(m), ext, mu.hermitian_hint());
}

// ---------------------------------------------------------------------------
// Sampling

double sample_shots(double expectation, int shots, double readout_error, std::mt19937_64& rng) {
  if (shots < 1) throw DomainError("shots must be >= 1");
  if (std::abs(expectation) > 1.0 + 1e-9) throw DomainError("expectation value outside [-1, 1]");
  const double e = std::clamp(expectation, -1.0, 1.0);
  const double p = 0.5 * (1.0 + e);
  const double p_obs = p * (1.0 - readout_error) + (1.0 - p) * readout_error;
  std::binomial_distribution<int> dist(shots, std::clamp(p_obs, 0.0, 1.0));
  const int k = dist(rng);
  return 2.0 * k / shots - 1.0;
}

std::mt19937_64 job_rng(std::uint64_t seed, std::size_t t_index, Part part) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t_index), static_cast<std::uint32_t>(part == Part::Im ? 1 : 0)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// SO2 sequence

double so2_displacement_duration(const So2Params& p, const UnitMap& u) {
  const SimulatorFrequencies f = map_units(p, u);
  const double beta = std::abs(p.alpha) / 2.0;
  if (beta == 0.0) return 0.0;
  if (!(f.omega_s > 0.0)) throw ConfigError("displacement needs Omega_S > 0");
  return beta / f.omega_s;
}

namespace {

Matrix so2_prep_unitary(const So2Params& p, const UnitMap& u, const HilbertSpec& spec,
                        std::optional<double> duration) {
  const SimulatorFrequencies f = map_units(p, u);
  const double tau = so2_displacement_duration(p, u);
  double used = tau;
  if (duration) {
    const double rel = tau > 0.0 ? std::abs(*duration - tau) / tau : std::abs(*duration);
    if (rel > 0.01) {
      std::ostringstream os;
      os << "displacement duration " << *duration << " s inconsistent with Omega_S: |beta|/Omega_S = " << tau
         << " s (mismatch " << 100.0 * rel << "% > 1%)";
      throw ConfigError(os.str());
    }
    used = *duration;
  }
  // Resonant SDF with phi = -pi/2 displaces |+> by -Omega_S tau; the sign of
  // alpha selects the phase.
  const double phase = p.alpha >= 0.0 ? -kPi / 2 : kPi / 2;
  OperatorMatrix h_disp = build_sdf_hamiltonian({f.omega_s, 0.0, phase}, spec);
  Matrix u_disp = UnitaryPropagator(h_disp).unitary(used);
  return rotation_y(spec, -kPi / 2).matrix() * u_disp * rotation_y(spec, kPi / 2).matrix();
}

}  // namespace

Matrix so2_prepared_state(const So2Params& p, const UnitMap& u, const NoiseSpec& noise, const HilbertSpec& spec,
                          std::optional<double> duration) {
  Matrix rho0 = thermal_state(spec, 0, noise.nbar).density_matrix();
  Matrix prep = so2_prep_unitary(p, u, spec, duration);
  return prep * rho0 * prep.adjoint();
}

Autocorrelation run_so2_sequence(const So2Params& p, const UnitMap& u, const NoiseSpec& noise,
                                 const PropagationPlan& plan, const ShotPlan& shots, const So2RunOptions& opts) {
  p.validate();
  u.validate();
  noise.validate();
  plan.validate();
  shots.validate();
  if (opts.n_max < 2) throw DomainError("n_max must be >= 2");

  const HilbertSpec spec(2, {opts.n_max});
  const SimulatorFrequencies f = map_units(p, u);
  OperatorMatrix H = build_sdf_hamiltonian({f.omega_s, f.delta, 0.0}, spec);
  const Matrix sz = embed_qudit_operator(spec, pauli_z(), true).matrix();
  const Matrix rx_im = rotation_x(spec, -kPi / 2).matrix();

  // Truncation check for the largest displacement reached during evolution.
  displacement_operator(spec, 0, cplx(std::abs(p.alpha), 0.0));

  Matrix prep = so2_prep_unitary(p, u, spec, opts.displacement_duration);
  const std::size_t nt = plan.t_grid.size();
  std::vector<Part> parts{Part::Re};
  if (shots.measure_imaginary) parts.push_back(Part::Im);

  // expectation[part][t]
  std::vector<std::vector<double>> expect(parts.size(), std::vector<double>(nt, 0.0));
  const bool pure = noise.nbar == 0.0;
  const bool unitary = noise.is_noiseless();

  if (plan.method == PropagationMethod::Lindblad || !unitary) {
    if (plan.method == PropagationMethod::Trotter) {
      throw ConfigError("Trotter propagation is only available for noiseless runs");
    }
    const Matrix rho_prep = so2_prepared_state(p, u, noise, spec, opts.displacement_duration);
    LindbladModel model = LindbladModel::from_noise(H, noise, 0);
    parallel_for(parts.size(), opts.workers, [&](std::size_t k) {
      Matrix rho0 = rho_prep;
      if (parts[k] == Part::Im) rho0 = rx_im * rho0 * rx_im.adjoint();
      integrate_lindblad(
          model, rho0, plan.t_grid,
          [&](std::size_t g, const Matrix& rho) { expect[k][g] = (sz * rho).trace().real(); }, opts.lindblad);
    });
  } else if (plan.method == PropagationMethod::Trotter) {
    std::vector<OperatorMatrix> terms{
        OperatorMatrix(f.delta * number_operator(spec, 0).matrix(), spec, true),
        OperatorMatrix(H.matrix() - f.delta * number_operator(spec, 0).matrix(), spec, true)};
    parallel_for(parts.size(), opts.workers, [&](std::size_t k) {
      Matrix rho = so2_prepared_state(p, u, noise, spec, opts.displacement_duration);
      if (parts[k] == Part::Im) rho = rx_im * rho * rx_im.adjoint();
      QuantumState state = QuantumState::density(spec, rho, 1e-8);
      expect[k][0] = (sz * rho).trace().real();
      for (std::size_t g = 1; g < nt; ++g) {
        state = trotter_step(terms, state, plan.t_grid[g] - plan.t_grid[g - 1], plan.slices_per_step);
        expect[k][g] = (sz * state.density_matrix()).trace().real();
      }
    });
  } else {
    UnitaryPropagator prop(H);
    if (pure) {
      Vector psi0 = prep.col(0);
      parallel_for(nt * parts.size(), opts.workers, [&](std::size_t job) {
        const std::size_t k = job / nt;
        const std::size_t g = job % nt;
        Vector v = parts[k] == Part::Im ? Vector(rx_im * psi0) : psi0;
        v = prop.apply(v, plan.t_grid[g], plan.direction_sign);
        expect[k][g] = v.dot(sz * v).real();
      });
    } else {
      const Matrix rho_prep = so2_prepared_state(p, u, noise, spec, opts.displacement_duration);
      parallel_for(nt * parts.size(), opts.workers, [&](std::size_t job) {
        const std::size_t k = job / nt;
        const std::size_t g = job % nt;
        Matrix rho = parts[k] == Part::Im ? Matrix(rx_im * rho_prep * rx_im.adjoint()) : rho_prep;
        rho = prop.apply_density(rho, plan.t_grid[g], plan.direction_sign);
        expect[k][g] = (sz * rho).trace().real();
      });
    }
  }

  Autocorrelation out;
  out.t = plan.t_grid;
  out.unit_map = u;
  out.has_imaginary = shots.measure_imaginary;
  out.values.assign(nt, cplx(0.0, 0.0));
  out.re_stderr.assign(nt, 0.0);
  out.im_stderr.assign(nt, 0.0);
  const double bias = 1.0 - 2.0 * noise.readout_error;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t g = 0; g < nt; ++g) {
      double value = 0.0;
      double se = 0.0;
      if (shots.sampled) {
        std::mt19937_64 rng = job_rng(shots.rng_seed, g, parts[k]);
        value = sample_shots(expect[k][g], shots.shots_per_point, noise.readout_error, rng);
        se = std::sqrt(std::max(0.0, 1.0 - value * value) / shots.shots_per_point);
      } else {
        value = bias * expect[k][g];
      }
      if (parts[k] == Part::Re) {
        out.values[g].real(value);
        out.re_stderr[g] = se;
      } else {
        out.values[g].imag(value);
        out.im_stderr[g] = se;
      }
    }
  }
  out.kind = shots.sampled ? AutocorrelationKind::Sampled : AutocorrelationKind::Exact;
  out.shots = shots.sampled ? shots.shots_per_point : 0;
  return out;
}

}  // namespace vibronic_td
