#pragma once

// Autocorrelation-measurement circuits, the SDF mapping, the SO2 pulse
// sequence and finite-shot sampling.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vibronic_td/dynamics.hpp"
#include "vibronic_td/quantum_core.hpp"
#include "vibronic_td/vibronic_model.hpp"

namespace vibronic_td {

enum class Part { Re, Im };

/// Where the R_x(-pi/2) that selects Im a(t) sits in the ancilla circuit.
enum class ImGatePlacement { AfterFinalHadamard, BeforeFirstHadamard };

struct SdfParams {
  double omega_s = 0.0;
  double delta = 0.0;
  double varphi = 0.0;
  void validate() const;
};

struct ShotPlan {
  int shots_per_point = 500;
  std::uint64_t rng_seed = 0;
  bool measure_imaginary = true;
  /// false: exact expectation values, no sampling.
  bool sampled = true;
  void validate() const;
};

enum class AutocorrelationKind { Exact, Sampled };

struct Autocorrelation {
  /// Simulator-frame times (s).
  std::vector<double> t;
  std::vector<cplx> values;
  std::vector<double> re_stderr;
  std::vector<double> im_stderr;
  AutocorrelationKind kind = AutocorrelationKind::Exact;
  int shots = 0;
  UnitMap unit_map;
  bool has_imaginary = true;
  /// Exponential window already applied, if any.
  std::optional<double> window_tau;

  std::size_t size() const { return t.size(); }
  void validate() const;
  bool uniform(double rel_tol = 1e-9) const;
  double dt() const;
  /// t_simulator_s,t_molecular_s,re,im,re_stderr,im_stderr
  std::string to_csv() const;
  static Autocorrelation exact(std::vector<double> t, std::vector<cplx> values, UnitMap u = {});
};

/// delta n + sqrt2 Omega_S sigma_x (cos(phi) Q + sin(phi) P)
OperatorMatrix build_sdf_hamiltonian(const SdfParams& p, const HilbertSpec& spec);

/// <Psi0| mu^+ e^{-iHt} mu e^{+iH0 t} |Psi0>, evaluated directly.
cplx direct_autocorrelation(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                            const QuantumState& psi0, double t);

/// Ancilla-qubit interferometer: ancilla prepended to the system. H0 acts on the system space.
class AncillaCircuit {
 public:
  AncillaCircuit(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                 const QuantumState& psi0, ImGatePlacement placement = ImGatePlacement::AfterFinalHadamard);

  /// Ancilla <sigma_z> at the end of the circuit.
  double run(double t, Part part) const;
  cplx autocorrelation(double t) const { return {run(t, Part::Re), run(t, Part::Im)}; }

 private:
  double run_pure(const Vector& psi, double t, Part part) const;

  UnitaryPropagator prop_h_;
  UnitaryPropagator prop_h0_;
  Matrix mu_;
  std::vector<std::pair<double, Vector>> ensemble_;
  ImGatePlacement placement_;
};

/// Reference-level interferometer: (d+1)-level qudit with the reference level, no ancilla.
/// H0 for the backward segment is the <0|H'|0> block; A_init acts on the modes.
class ReferenceCircuit {
 public:
  ReferenceCircuit(const OperatorMatrix& H_expanded, const OperatorMatrix& mu_prime, const Matrix& A_init);

  /// <sigma_z^(0,ref)> at the end of the circuit.
  double run(double t, Part part) const;
  cplx autocorrelation(double t) const { return {run(t, Part::Re), run(t, Part::Im)}; }
  const HilbertSpec& spec() const { return spec_; }

 private:
  HilbertSpec spec_;
  UnitaryPropagator prop_h_;
  UnitaryPropagator prop_h0_;
  Matrix mu_prime_;
  Matrix a_init_;
};

double run_ancilla_circuit(const OperatorMatrix& H, const OperatorMatrix& H0, const OperatorMatrix& mu,
                           const QuantumState& psi0, double t, Part part,
                           ImGatePlacement placement = ImGatePlacement::AfterFinalHadamard);

double run_reference_circuit(const OperatorMatrix& H_expanded, const OperatorMatrix& mu_prime,
                             const Matrix& A_init, double t, Part part);

/// mu (+) |ref><ref| on the expanded space.
OperatorMatrix expand_dipole(const OperatorMatrix& mu);

/// k ~ Binomial(shots, p'), p' = p(1-r) + (1-p)r, p = (1+e)/2; returns 2k/shots - 1.
double sample_shots(double expectation, int shots, double readout_error, std::mt19937_64& rng);

/// Deterministic per-job stream from (seed, t-index, part).
std::mt19937_64 job_rng(std::uint64_t seed, std::size_t t_index, Part part);

struct So2RunOptions {
  int n_max = 32;
  /// Explicit displacement pulse length (s); checked against |beta|/Omega_S.
  std::optional<double> displacement_duration;
  int workers = 0;
  LindbladOptions lindblad;
};

/// Duration of the resonant SDF pulse that prepares the -alpha/2 displacement.
double so2_displacement_duration(const So2Params& p, const UnitMap& u);

/// Thermal prep, R_y(pi/2), resonant SDF displacement, R_y(-pi/2), optional
/// R_x(-pi/2) for Im, evolution under F H'' (plus noise), <sigma_z>.
Autocorrelation run_so2_sequence(const So2Params& p, const UnitMap& u, const NoiseSpec& noise,
                                 const PropagationPlan& plan, const ShotPlan& shots,
                                 const So2RunOptions& opts = {});

/// The prepared qubit+mode state (before the Im gate), as a density matrix.
Matrix so2_prepared_state(const So2Params& p, const UnitMap& u, const NoiseSpec& noise,
                          const HilbertSpec& spec, std::optional<double> duration = std::nullopt);

}  // namespace vibronic_td
