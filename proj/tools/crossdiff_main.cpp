// crossdiff: command-line runner for the cross-diffusion solvers and checks.
//
//   crossdiff run-fixed --config cfg.json [--out DIR] [--seed N] [--threads N] [--timing]
//
// Exit codes: 0 ok, 1 certificate failed, 2 config error, 3 non-convergence, 4 IO error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "crossdiff/config.hpp"
#include "crossdiff/experiment.hpp"

namespace {

using namespace crossdiff;
namespace fs = std::filesystem;

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool timing = false;
};

// Best effort: a config error still leaves a summary behind when we know where.
void write_error_summary(const fs::path& dir, Mode mode, const std::string& reason) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "summary.json");
  if (!out) return;
  const nlohmann::json j{{"mode", to_string(mode)},
                         {"status", "config_error"},
                         {"exit_code", kExitConfig},
                         {"reason", reason},
                         {"files", {"summary.json"}}};
  out << j.dump(2) << '\n';
}

int execute(Mode mode, const Args& args) {
  std::optional<fs::path> out_dir;
  if (!args.out.empty()) out_dir = args.out;
  ExperimentConfig config;
  try {
    const auto doc = load_config_file(args.config);
    if (!out_dir && doc.is_object() && doc.contains("output") && doc["output"].is_string())
      out_dir = doc["output"].get<std::string>();
    config = parse_config(doc, mode);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    if (out_dir) write_error_summary(*out_dir, mode, e.what());
    return kExitConfig;
  }
  if (out_dir) config.output = *out_dir;
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = std::max(1u, *args.threads);

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto result = run_experiment(config, {.timing = args.timing});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << to_string(mode) << ": " << result.status;
    if (!result.reason.empty()) std::cout << " (" << result.reason << ")";
    std::cout << "; " << result.files.size() << " files in " << result.output.string() << '\n';
    std::cerr << "wall clock " << seconds << " s\n";
    return result.exit_code;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-diffusion solvers, structure certificate and lattice oracle"};
  app.require_subcommand(1);
  Args args;

  const std::pair<const char*, Mode> commands[] = {
      {"run-fixed", Mode::fixed},
      {"run-moving", Mode::moving},
      {"check-structure", Mode::check_structure},
      {"lattice", Mode::lattice},
      {"compare", Mode::compare},
  };
  const char* descriptions[] = {
      "Fixed-domain finite-volume run with no-flux boundaries",
      "Growing-film run on the reference domain",
      "Sampled certificate of H(u)A(u) >= alpha Lambda(u)",
      "Kinetic Monte Carlo exchange dynamics",
      "Lattice densities against the fixed-domain solver",
  };
  std::optional<Mode> chosen;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, descriptions[i]);
    sub->add_option("--config", args.config, "JSON experiment file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "Output directory (overrides the config)");
    sub->add_option("--seed", args.seed, "Random seed (overrides the config)");
    sub->add_option("--threads", args.threads, "Worker thread cap");
    sub->add_flag("--timing", args.timing, "Record wall-clock seconds in summary.json");
    sub->callback([&chosen, mode = commands[i].second] { chosen = mode; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return execute(*chosen, args);
}
