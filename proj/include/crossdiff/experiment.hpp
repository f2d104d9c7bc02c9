#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "crossdiff/config.hpp"

namespace crossdiff {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // a certificate was computed and did not pass
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitIo = 4,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  /// Adds wall_clock_seconds to summary.json (which then differs between reruns).
  bool timing = false;
};

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string status;  // ok, failed, refused, non_convergence
  std::string reason;
  std::filesystem::path output;
  std::vector<std::string> files;  // relative to output, summary.json last
  nlohmann::json summary;
};

/**
 * Runs one experiment and writes its artifacts into config.output:
 *   fixed            trajectory.csv diagnostics.csv plot.csv
 *   moving           trajectory.csv diagnostics.csv plot.csv mass_balance.json
 *   check-structure  certificate.json
 *   lattice          density.csv plot.csv
 *   compare          density.csv compare.csv plot.csv
 * and summary.json listing every file. Throws IoError when the directory or a
 * file cannot be written; solver failures are reported in the result.
 */
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace crossdiff
