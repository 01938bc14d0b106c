#pragma once

// Run configuration: a single JSON document, validated field by field before
// any computation. Frequencies enter in Hz and are converted to rad/s here.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vibronic_td/calibration.hpp"
#include "vibronic_td/dynamics.hpp"
#include "vibronic_td/protocol.hpp"
#include "vibronic_td/spectrum.hpp"
#include "vibronic_td/vibronic_model.hpp"

namespace vibronic_td {

enum class Experiment { So2Fig4, CircuitEquivalence, QvcSpectrum, DetuningScan, PhaseScan, DisplacementFit };

std::string experiment_name(Experiment e);

struct GridConfig {
  /// Simulator time (s).
  double t_max = 2e-3;
  int points = 200;
  PropagationMethod method = PropagationMethod::Exact;
  int slices_per_step = 1;
};

struct SpectrumConfig {
  SpectrumMethod method = SpectrumMethod::FPA;
  int order = 0;
  /// rad/s, simulator frame.
  double theta = 2.0 * 3.14159265358979323846 * 8e3;
  /// rad/s, molecular frame.
  double epsilon = 0.0;
  /// Simulator time (s); 0 disables the window.
  double window_tau = 6e-3;
  int points = 2048;
  /// Simulator-frame grid bounds (rad/s); unset selects the default grid.
  std::optional<double> freq_min;
  std::optional<double> freq_max;
  AxisFrame axis = AxisFrame::Simulator;
};

struct QvcConfig {
  int initial_state = 0;
  int target_state = 1;
};

struct CalibrationConfig {
  LaserParams laser = LaserParams::standard();
  double pulse_time = 150e-6;
  /// Scan range: rad/s offsets for detuning scans, rad for phase scans.
  double scan_min = 0.0;
  double scan_max = 0.0;
  int scan_points = 41;
  /// 0 keeps exact populations.
  int shots = 0;
  double beta = 0.5;
  double zeta = 0.0;
  double t_max = 400e-6;
  int points = 60;
  int n_max = 24;
};

struct RunConfig {
  Experiment experiment = Experiment::So2Fig4;
  std::optional<std::filesystem::path> molecule_file;
  So2Params so2 = So2Params::standard();
  std::optional<QvcModel> qvc;
  UnitMap unit_map = UnitMap::standard();
  NoiseSpec noise;
  ShotPlan shots;
  GridConfig grid;
  SpectrumConfig spectrum;
  QvcConfig qvc_options;
  CalibrationConfig calibration;
  int n_max = 32;
  int workers = 0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::filesystem::path config_path;

  /// Fully resolved configuration in input units (Hz, s).
  nlohmann::ordered_json resolved() const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
  std::string text() const;
};

/// Parses and validates; `out` is filled only when the report is clean.
ValidationReport parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir, RunConfig* out);
ValidationReport load_config(const std::filesystem::path& path, RunConfig* out);

/// Reads {"so2": {omega_b_Hz, alpha, delta_E_Hz}} or a QVC molecule document.
struct MoleculeFile {
  std::optional<So2Params> so2;
  std::optional<QvcModel> qvc;
};
MoleculeFile load_molecule_file(const std::filesystem::path& path);

}  // namespace vibronic_td
