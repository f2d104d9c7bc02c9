#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "crossdiff/fv_fixed.hpp"
#include "crossdiff/moving_domain.hpp"
#include "crossdiff/simplex.hpp"

namespace crossdiff {

enum class Mode { fixed, moving, check_structure, lattice, compare };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// Schema violation; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named initial profiles, evaluated at x in [0, length].
struct InitialProfile {
  enum class Kind { uniform, cosine, step } kind = Kind::uniform;
  // uniform: values; cosine: mean + amplitude cos(mode pi x / length); step: left / right of position
  std::vector<double> values, mean, amplitude, left, right;
  std::vector<int> mode;
  double position = 0.5;  // fraction of the length

  std::vector<double> operator()(double x, double length) const;
};

struct LatticeConfig {
  std::size_t sites = 1024;
  std::size_t replicas = 16;
  std::size_t bins = 32;
  std::vector<double> times;
};

struct ExperimentConfig {
  std::optional<Mode> mode;
  std::size_t species = 1;
  std::vector<std::vector<double>> k;
  std::size_t cells = 100;
  double length = 1.0;  // physical length, or e0 in moving mode
  SolverConfig solver;
  std::size_t output_every = 1;
  InitialProfile initial;
  std::optional<FluxSchedule> flux;
  std::size_t structure_samples = 10000;
  std::size_t structure_directions = 8;
  LatticeConfig lattice;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path output = "out";

  CoefficientMatrix coefficients() const { return CoefficientMatrix::from_full(k); }
};

/// Parses and validates everything the given mode needs. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, Mode mode);
/// Reads a JSON file; throws ConfigError on unreadable or malformed input.
nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace crossdiff
