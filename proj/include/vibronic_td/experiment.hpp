#pragma once

// Named experiments, artifact writing and the manifest.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vibronic_td/config.hpp"
#include "vibronic_td/oracle.hpp"

namespace vibronic_td {

const char* tool_version();

/// Absorption setup for a QVC model on the simulator clock.
/// psi0 is the vibrational ground state of the initial electronic block.
struct QvcSetup {
  HilbertSpec spec;
  OperatorMatrix H;
  /// 1_d (x) <init|H|init>, acting on the full system space.
  OperatorMatrix H0;
  /// <init|H|init> on the modes.
  Matrix block;
  OperatorMatrix mu;
  QuantumState psi0;
  /// Mode unitary with A |vac> = ground state of `block` (up to phase).
  Matrix A_init;
};

QvcSetup make_qvc_setup(const QvcModel& model, int n_max, int initial_state, int target_state,
                        double scale_factor = 1.0);

/// Lines of the SO2 model on the simulator clock with the 0-0 line at 0.
StickSpectrum so2_sticks(const So2Params& p, const UnitMap& u, int n_max);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ArtifactSet {
  std::filesystem::path root;
  /// Relative paths in write order.
  std::vector<std::string> files;

  void write(const std::string& rel, const std::string& content);
};

/// Runs cfg and writes all artifacts plus manifest.json under cfg.output_dir.
/// Returns the manifest "results" summary.
nlohmann::ordered_json run_experiment(const RunConfig& cfg);

/// Exit codes of the command-line front-end.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitCompute = 3 };

int command_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int command_run(const std::filesystem::path& config, const std::optional<std::filesystem::path>& output_dir,
                const std::optional<std::uint64_t>& seed, bool validate_only, std::ostream& out, std::ostream& err);

}  // namespace vibronic_td
