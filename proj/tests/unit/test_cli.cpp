#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "vibronic_td/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(VIBRONIC_TD_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vibronic_td_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

json small_so2() {
  return json::parse(std::string(R"({
    "experiment": "so2-fig4",
    "molecule_file": ")") + VIBRONIC_TD_SOURCE_DIR + R"(/data/presets/so2.json",
    "shots": {"sampled": true, "per_point": 100},
    "grid": {"t_max_s": 1e-3, "points": 40},
    "spectrum": {"points": 256, "freq_min_Hz": -2000, "freq_max_Hz": 12000},
    "hilbert": {"n_max": 20},
    "seed": 3
  })");
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("shipped configs validate") {
  for (const char* name : {"so2_fig4_noiseless.json", "so2_fig4_noisy.json"}) {
    const Result r = run_cli("validate --config " + q(fs::path(VIBRONIC_TD_SOURCE_DIR) / "configs" / name));
    CHECK_MESSAGE(r.code == 0, r.output);
  }
}

TEST_CASE("missing config and usage errors") {
  CHECK(run_cli("validate --config /nonexistent/config.json").code == 2);
  CHECK(run_cli("run").code == 1);
  CHECK(run_cli("--version").output.find(vibronic_td::tool_version()) != std::string::npos);
}

TEST_CASE("a negative heating rate fails validation and names the field") {
  const fs::path dir = scratch("neg");
  json j = small_so2();
  j["noise"] = {{"gamma_h", -5.0}};
  const Result r = run_cli("run --config " + q(write_config(dir, j)) + " --output-dir " + q(dir / "out"));
  CHECK(r.code == 2);
  CHECK(r.output.find("noise.gamma_h") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("wrong types and unknown fields are reported") {
  const fs::path dir = scratch("types");
  json j = small_so2();
  j["grid"]["points"] = "many";
  j["colour"] = "blue";
  const Result r = run_cli("validate --config " + q(write_config(dir, j)));
  CHECK(r.code == 2);
  CHECK(r.output.find("grid.points") != std::string::npos);
  CHECK(r.output.find("colour") != std::string::npos);
}

TEST_CASE("thermal occupation too large for the cutoff warns with both fields") {
  const fs::path dir = scratch("nbar");
  json j = small_so2();
  j["noise"] = {{"nbar", 2.0}};
  j["hilbert"]["n_max"] = 20;
  const Result r = run_cli("validate --config " + q(write_config(dir, j)));
  CHECK(r.output.find("noise.nbar") != std::string::npos);
  CHECK(r.output.find("hilbert.n_max") != std::string::npos);
}

TEST_CASE("validate-only writes nothing") {
  const fs::path dir = scratch("vo");
  const Result r =
      run_cli("run --validate-only --config " + q(write_config(dir, small_so2())) + " --output-dir " + q(dir / "out"));
  CHECK(r.code == 0);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("runs are byte-identical and the manifest covers every artifact") {
  const fs::path dir = scratch("repro");
  const fs::path cfg = write_config(dir, small_so2());
  const Result a = run_cli("run --config " + q(cfg) + " --output-dir " + q(dir / "a"));
  const Result b = run_cli("run --config " + q(cfg) + " --output-dir " + q(dir / "b"));
  REQUIRE_MESSAGE(a.code == 0, a.output);
  REQUIRE_MESSAGE(b.code == 0, b.output);

  std::set<std::string> on_disk;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (e.is_regular_file()) on_disk.insert(fs::relative(e.path(), dir / "a").generic_string());
  }
  for (const char* f : {"autocorrelation.csv", "spectrum.csv", "sticks.csv", "spectrum.json", "manifest.json",
                        "plotdata/autocorrelation.dat", "plotdata/spectrum.dat", "plotdata/sticks.dat"}) {
    CHECK_MESSAGE(on_disk.count(f) == 1, f);
  }
  for (const auto& f : on_disk) {
    if (f.ends_with(".csv") || f.ends_with(".dat")) CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }

  const json m = json::parse(slurp(dir / "a" / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& o : m["outputs"]) {
    listed.insert(o["path"].get<std::string>());
    CHECK(o["sha256"].get<std::string>() == vibronic_td::sha256_file(dir / "a" / o["path"].get<std::string>()));
  }
  on_disk.erase("manifest.json");
  CHECK(listed == on_disk);
  CHECK(m["version"].get<std::string>() == vibronic_td::tool_version());
  CHECK(m["config"]["seed"].get<int>() == 3);
  CHECK(m["inputs"].size() >= 2);
}

TEST_CASE("seed override changes sampled output") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_config(dir, small_so2());
  REQUIRE(run_cli("run --config " + q(cfg) + " --output-dir " + q(dir / "a")).code == 0);
  REQUIRE(run_cli("run --config " + q(cfg) + " --seed 99 --output-dir " + q(dir / "b")).code == 0);
  CHECK(slurp(dir / "a" / "autocorrelation.csv") != slurp(dir / "b" / "autocorrelation.csv"));
}

TEST_CASE("displacement fit writes scan and fit artifacts") {
  const fs::path dir = scratch("fit");
  const json j = json::parse(R"({
    "experiment": "displacement-fit",
    "calibration": {"beta": 0.6, "t_max_s": 8e-4, "points": 41, "shots": 0}
  })");
  const Result r = run_cli("run --config " + q(write_config(dir, j)) + " --output-dir " + q(dir / "out"));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const json fit = json::parse(slurp(dir / "out" / "fit.json"));
  CHECK(fit["params"]["beta"].get<double>() == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(fs::exists(dir / "out" / "scan.csv"));
}

TEST_CASE("sha256 of a known string") {
  CHECK(vibronic_td::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}
