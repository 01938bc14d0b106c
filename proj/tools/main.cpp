// vibronic-td command-line front-end.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "vibronic_td/experiment.hpp"

int main(int argc, char** argv) {
  using namespace vibronic_td;
  CLI::App app{"Time-domain vibronic spectra on an emulated trapped-ion simulator"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string run_config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool validate_only = false;
  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", run_config, "JSON configuration")->required();
  auto* out_opt = run->add_option("--output-dir", output_dir, "Override output_dir");
  auto* seed_opt = run->add_option("--seed", seed, "Override seed");
  run->add_flag("--validate-only", validate_only, "Validate and exit");

  std::string validate_config;
  CLI::App* validate = app.add_subcommand("validate", "Validate a config file without computing");
  validate->add_option("--config", validate_config, "JSON configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*validate) return command_validate(validate_config, std::cout, std::cerr);
  std::optional<std::filesystem::path> dir;
  if (*out_opt) dir = output_dir;
  std::optional<std::uint64_t> s;
  if (*seed_opt) s = seed;
  return command_run(run_config, dir, s, validate_only, std::cout, std::cerr);
}
