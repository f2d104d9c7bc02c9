#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "crossdiff_cli_test";

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const auto p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CROSSDIFF_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json summary(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  return nlohmann::json::parse(in);
}

const char* kFixed = R"({"mode": "fixed", "species": 2, "K": [[0,1,2],[1,0,3],[2,3,0]],
  "grid": {"cells": 20, "length": 1}, "solver": {"dt": 1e-3, "t_end": 0.01},
  "initial": {"preset": "uniform", "values": [0.3, 0.2]}})";

}  // namespace

TEST_CASE("successful run lists every file it wrote") {
  const auto cfg = write_config("fixed.json", kFixed);
  const auto out = kRoot / "fixed_out";
  fs::remove_all(out);
  CHECK(cli("run-fixed --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto s = summary(out);
  CHECK(s["status"] == "ok");
  CHECK(s["exit_code"] == 0);
  for (const auto& f : s["files"]) CHECK(fs::exists(out / f.get<std::string>()));
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "plot.csv"));
  CHECK(fs::exists(out / "diagnostics.csv"));
}

TEST_CASE("config errors exit with 2") {
  CHECK(cli("run-fixed") == 2);
  CHECK(cli("no-such-command --config x") == 2);
  const auto bad = write_config("bad.json", R"({"species": 1, "K": [[0,1],[1,0]], "unknown_key": 3})");
  const auto out = kRoot / "bad_out";
  fs::remove_all(out);
  CHECK(cli("run-fixed --config " + bad.string() + " --out " + out.string()) == 2);
  CHECK(summary(out)["status"] == "config_error");
  // mode in the file must agree with the subcommand
  CHECK(cli("run-moving --config " + write_config("fixed2.json", kFixed).string()) == 2);
  const auto rate = write_config("rate.json", R"({"species": 1, "K": [[0,-1],[-1,0]]})");
  CHECK(cli("run-fixed --config " + rate.string() + " --out " + out.string()) == 2);
}

TEST_CASE("structure check: refusal and pass") {
  const auto ok = write_config("ok.json", R"({"species": 2, "K": [[0,1,2],[1,0,3],[2,3,0]],
    "structure": {"samples": 500}})");
  const auto out = kRoot / "structure_out";
  fs::remove_all(out);
  CHECK(cli("check-structure --config " + ok.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "certificate.json"));

  const auto zero = write_config("zero.json", R"({"species": 2, "K": [[0,1,2],[1,0,0],[2,0,0]],
    "structure": {"samples": 500}})");
  const auto out2 = kRoot / "structure_refused";
  fs::remove_all(out2);
  CHECK(cli("check-structure --config " + zero.string() + " --out " + out2.string()) == 2);
  CHECK(summary(out2)["status"] == "refused");
}

TEST_CASE("non-convergence exits with 3") {
  const auto cfg = write_config("stiff.json", R"({"species": 1, "K": [[0,1],[1,0]],
    "grid": {"cells": 20, "length": 1},
    "solver": {"dt": 1.0, "t_end": 1.0, "newton_max_iter": 1, "newton_tol": 1e-300, "dt_min": 0.5},
    "initial": {"preset": "step", "left": [0.9], "right": [0.1]}})");
  const auto out = kRoot / "stiff_out";
  fs::remove_all(out);
  CHECK(cli("run-fixed --config " + cfg.string() + " --out " + out.string()) == 3);
  const auto s = summary(out);
  CHECK(s["exit_code"] == 3);
  for (const auto& f : s["files"]) CHECK(fs::exists(out / f.get<std::string>()));
}

TEST_CASE("unwritable output exits with 4") {
  const auto cfg = write_config("fixed3.json", kFixed);
  const auto blocker = kRoot / "blocker";
  std::ofstream(blocker) << "x";
  CHECK(cli("run-fixed --config " + cfg.string() + " --out " + (blocker / "sub").string()) == 4);
}
