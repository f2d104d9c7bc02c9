#include "crossdiff/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "crossdiff/entropy.hpp"
#include "crossdiff/lattice.hpp"
#include "crossdiff/mobility.hpp"

namespace crossdiff {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw IoError(path.string() + ": cannot open for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw IoError(path_.string() + ": write failed");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<std::string> fraction_columns(std::size_t n, const std::string& prefix) {
  std::vector<std::string> c;
  for (std::size_t i = 0; i <= n; ++i) c.push_back(prefix + std::to_string(i));
  return c;
}

template <class T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<double> with_solvent(const Composition& u) {
  std::vector<double> v{u.u0()};
  v.insert(v.end(), u.values().begin(), u.values().end());
  return v;
}

bool keep_step(std::size_t s, std::size_t last, std::size_t every) { return s % every == 0 || s == last; }

class Session {
 public:
  Session(const ExperimentConfig& c, const RunOptions& o) : c_(c), o_(o), dir_(c.output) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError(dir_.string() + ": cannot create output directory");
    result_.output = dir_;
    result_.status = "ok";
    summary_["mode"] = to_string(*c.mode);
    summary_["species"] = c.species;
    summary_["seed"] = c.seed;
  }

  fs::path file(const std::string& name) {
    result_.files.push_back(name);
    return dir_ / name;
  }

  void fail(int code, std::string status, std::string reason) {
    result_.exit_code = code;
    result_.status = std::move(status);
    result_.reason = std::move(reason);
  }

  json& summary() { return summary_; }

  ExperimentResult finish(double seconds) {
    result_.files.push_back("summary.json");
    summary_["status"] = result_.status;
    summary_["exit_code"] = result_.exit_code;
    if (!result_.reason.empty()) summary_["reason"] = result_.reason;
    summary_["files"] = result_.files;
    if (o_.timing) summary_["wall_clock_seconds"] = seconds;
    write_json(dir_ / "summary.json", summary_);
    result_.summary = summary_;
    return result_;
  }

 private:
  const ExperimentConfig& c_;
  const RunOptions& o_;
  fs::path dir_;
  ExperimentResult result_;
  json summary_;
};

Field initial_field(const ExperimentConfig& c, const Grid1D& grid, double physical_length) {
  const double scale = physical_length / grid.length;
  try {
    return Field::from_profile(grid, c.species, [&](double x) { return c.initial(x * scale, physical_length); });
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
}

json diagnostics_json(const Diagnostics& d) {
  return {{"t", d.t}, {"masses", d.masses}, {"entropy", d.entropy}};
}

void write_fixed(Session& s, const ExperimentConfig& c, const Trajectory& traj) {
  const std::size_t n = c.species;
  const std::size_t last = traj.times.size() - 1;
  {
    Csv csv(s.file("trajectory.csv"), concat<std::string>({"t", "cell", "x"}, fraction_columns(n, "u_")));
    Csv plot(s.file("plot.csv"), {"t", "x", "species", "value"});
    for (std::size_t step = 0; step <= last; ++step) {
      if (!keep_step(step, last, c.output_every)) continue;
      const auto& f = traj.fields[step];
      for (std::size_t k = 0; k < f.cells(); ++k) {
        const auto u = with_solvent(f.at(k));
        std::vector<std::string> row{num(traj.times[step]), std::to_string(k), num(f.grid().center(k))};
        for (double v : u) row.push_back(num(v));
        csv.row(row);
        for (std::size_t i = 0; i <= n; ++i)
          plot.row({num(traj.times[step]), num(f.grid().center(k)), std::to_string(i), num(u[i])});
      }
    }
  }
  Csv diag(s.file("diagnostics.csv"),
           concat<std::string>(concat<std::string>({"t"}, fraction_columns(n, "mass_")), {"entropy", "newton_iterations"}));
  for (const auto& d : traj.diagnostics) {
    std::vector<std::string> row{num(d.t)};
    for (double m : d.masses) row.push_back(num(m));
    row.push_back(num(d.entropy));
    row.push_back(std::to_string(d.newton_iterations));
    diag.row(row);
  }
}

void run_fixed(Session& s, const ExperimentConfig& c) {
  const Grid1D grid(c.length, c.cells);
  const auto f0 = initial_field(c, grid, c.length);
  Trajectory traj;
  try {
    traj = run(f0, c.coefficients(), c.solver);
  } catch (const RunAborted& e) {
    traj = e.partial();
    s.fail(kExitNonConvergence, "non_convergence", e.what());
    s.summary()["worst_residual"] = e.worst_residual();
  }
  write_fixed(s, c, traj);
  const auto& first = traj.diagnostics.front();
  const auto& final = traj.diagnostics.back();
  double drift = 0.0;
  int iterations = 0;
  for (const auto& d : traj.diagnostics) {
    iterations += d.newton_iterations;
    for (std::size_t i = 0; i < d.masses.size(); ++i) drift = std::max(drift, std::abs(d.masses[i] - first.masses[i]));
  }
  s.summary()["initial"] = diagnostics_json(first);
  s.summary()["final"] = diagnostics_json(final);
  s.summary()["max_mass_drift"] = drift;
  s.summary()["steps"] = traj.times.size() - 1;
  s.summary()["newton_iterations"] = iterations;
}

void run_moving_mode(Session& s, const ExperimentConfig& c) {
  const MovingDomain domain{*c.flux, c.length};
  const Grid1D ref(1.0, c.cells);
  const auto f0 = initial_field(c, ref, c.length);
  MovingTrajectory traj;
  try {
    traj = run_moving(f0, c.coefficients(), domain, c.solver);
  } catch (const MovingRunAborted& e) {
    traj = e.partial();
    s.fail(kExitNonConvergence, "non_convergence", e.what());
    s.summary()["worst_residual"] = e.worst_residual();
  }
  const std::size_t n = c.species;
  const std::size_t last = traj.times.size() - 1;
  {
    Csv csv(s.file("trajectory.csv"), concat<std::string>({"t", "cell", "xi", "e", "x"}, fraction_columns(n, "u_")));
    Csv plot(s.file("plot.csv"), {"t", "x", "species", "value"});
    for (std::size_t step = 0; step <= last; ++step) {
      if (!keep_step(step, last, c.output_every)) continue;
      const auto& f = traj.fields[step];
      const double t = traj.times[step], e = traj.thickness[step];
      for (std::size_t k = 0; k < f.cells(); ++k) {
        const auto u = with_solvent(f.at(k));
        const double xi = ref.center(k);
        std::vector<std::string> row{num(t), std::to_string(k), num(xi), num(e), num(xi * e)};
        for (double v : u) row.push_back(num(v));
        csv.row(row);
        for (std::size_t i = 0; i <= n; ++i) plot.row({num(t), num(xi * e), std::to_string(i), num(u[i])});
      }
    }
    Csv diag(s.file("diagnostics.csv"), concat<std::string>(concat<std::string>({"t", "e"}, fraction_columns(n, "mass_")),
                                                            {"entropy", "newton_iterations"}));
    for (std::size_t step = 0; step <= last; ++step) {
      const auto& d = traj.diagnostics[step];
      std::vector<std::string> row{num(d.t), num(traj.thickness[step])};
      for (double m : d.masses) row.push_back(num(m));
      row.push_back(num(d.entropy));
      row.push_back(std::to_string(d.newton_iterations));
      diag.row(row);
    }
  }
  const auto balance = to_json(mass_balance(traj, domain));
  write_json(s.file("mass_balance.json"), balance);
  s.summary()["mass_balance"] = balance;
  s.summary()["initial"] = diagnostics_json(traj.diagnostics.front());
  s.summary()["final"] = diagnostics_json(traj.diagnostics.back());
  s.summary()["final_thickness"] = traj.thickness.back();
  s.summary()["steps"] = last;
}

void run_structure(Session& s, const ExperimentConfig& c) {
  StructureCheckOptions opts;
  opts.samples = c.structure_samples;
  opts.directions = c.structure_directions;
  opts.seed = c.seed;
  opts.threads = c.threads;
  try {
    const auto cert = check_structure(c.coefficients(), opts);
    const auto j = to_json(cert);
    write_json(s.file("certificate.json"), j);
    s.summary()["certificate"] = j;
    if (!cert.passed()) s.fail(kExitCheckFailed, "failed", "structure certificate did not pass");
  } catch (const HypothesisViolation& e) {
    s.fail(kExitConfig, "refused", e.what());
  }
}

DensityProfiles lattice_profiles(const ExperimentConfig& c) {
  KmcOptions opts;
  opts.times = c.lattice.times;
  opts.bins = c.lattice.bins;
  opts.replicas = c.lattice.replicas;
  opts.seed = c.seed;
  opts.threads = c.threads;
  auto make = [&](std::uint64_t seed) {
    return sample_lattice(c.lattice.sites, c.species, c.length, [&](double x) { return c.initial(x, c.length); }, seed);
  };
  return kmc_run(make, c.coefficients(), opts);
}

double bin_center(const ExperimentConfig& c, std::size_t b) {
  return (static_cast<double>(b) + 0.5) * c.length / static_cast<double>(c.lattice.bins);
}

void write_density(Session& s, const ExperimentConfig& c, const DensityProfiles& d, bool with_plot) {
  Csv csv(s.file("density.csv"), {"t", "bin", "species", "density", "replica_std"});
  for (std::size_t t = 0; t < d.times.size(); ++t)
    for (std::size_t b = 0; b < d.bins; ++b)
      for (std::size_t a = 0; a < d.labels; ++a)
        csv.row({num(d.times[t]), std::to_string(b), std::to_string(a), num(d.mean[t][b][a]), num(d.replica_std[t][b][a])});
  if (!with_plot) return;
  Csv plot(s.file("plot.csv"), {"t", "x", "species", "value"});
  for (std::size_t t = 0; t < d.times.size(); ++t)
    for (std::size_t b = 0; b < d.bins; ++b)
      for (std::size_t a = 0; a < d.labels; ++a)
        plot.row({num(d.times[t]), num(bin_center(c, b)), std::to_string(a), num(d.mean[t][b][a])});
}

void run_lattice_mode(Session& s, const ExperimentConfig& c) {
  const auto d = lattice_profiles(c);
  write_density(s, c, d, true);
  s.summary()["sites"] = c.lattice.sites;
  s.summary()["replicas"] = c.lattice.replicas;
  s.summary()["bins"] = c.lattice.bins;
}

void run_compare(Session& s, const ExperimentConfig& c) {
  const auto lattice = lattice_profiles(c);
  write_density(s, c, lattice, false);

  // PDE solution advanced segment by segment to the lattice output times.
  const Grid1D grid(c.length, c.cells);
  const auto k = c.coefficients();
  Field f = initial_field(c, grid, c.length);
  std::vector<Field> at_times;
  double t = 0.0;
  for (double target : c.lattice.times) {
    if (target > t) {
      SolverConfig seg = c.solver;
      seg.t_end = target - t;
      try {
        f = run(f, k, seg).fields.back();
      } catch (const RunAborted& e) {
        s.fail(kExitNonConvergence, "non_convergence", e.what());
        return;
      }
      t = target;
    }
    at_times.push_back(f);
  }

  const std::size_t per_bin = c.cells / c.lattice.bins;
  Csv csv(s.file("compare.csv"), {"t", "bin", "x", "species", "lattice", "pde", "difference"});
  Csv plot(s.file("plot.csv"), {"t", "x", "species", "source", "value"});
  json distances = json::array();
  double worst = 0.0;
  for (std::size_t ti = 0; ti < lattice.times.size(); ++ti) {
    double dist = 0.0;
    for (std::size_t b = 0; b < c.lattice.bins; ++b) {
      std::vector<double> pde(c.species + 1, 0.0);
      for (std::size_t j = 0; j < per_bin; ++j) {
        const auto u = with_solvent(at_times[ti].at(b * per_bin + j));
        for (std::size_t i = 0; i <= c.species; ++i) pde[i] += u[i] / static_cast<double>(per_bin);
      }
      for (std::size_t i = 0; i <= c.species; ++i) {
        const double lat = lattice.mean[ti][b][i];
        dist = std::max(dist, std::abs(lat - pde[i]));
        const auto tt = num(lattice.times[ti]), x = num(bin_center(c, b)), sp = std::to_string(i);
        csv.row({tt, std::to_string(b), x, sp, num(lat), num(pde[i]), num(lat - pde[i])});
        plot.row({tt, x, sp, "lattice", num(lat)});
        plot.row({tt, x, sp, "pde", num(pde[i])});
      }
    }
    distances.push_back({{"t", lattice.times[ti]}, {"max_abs_difference", dist}});
    worst = std::max(worst, dist);
  }
  s.summary()["distances"] = distances;
  s.summary()["max_abs_difference"] = worst;
  s.summary()["sites"] = c.lattice.sites;
  s.summary()["replicas"] = c.lattice.replicas;
  s.summary()["bins"] = c.lattice.bins;
  // The lattice rates reproduce the PDE exactly in the mean only for equal coefficients.
  bool equal = true;
  for (std::size_t i = 0; i <= c.species; ++i)
    for (std::size_t j = i + 1; j <= c.species; ++j) equal = equal && k(i, j) == k(0, 1);
  s.summary()["comparison"] = equal ? "equal_coefficients" : "consistency_trend_only";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.mode) throw ConfigError("mode: not set");
  const auto start = std::chrono::steady_clock::now();
  Session s(config, options);
  try {
    switch (*config.mode) {
      case Mode::fixed: run_fixed(s, config); break;
      case Mode::moving: run_moving_mode(s, config); break;
      case Mode::check_structure: run_structure(s, config); break;
      case Mode::lattice: run_lattice_mode(s, config); break;
      case Mode::compare: run_compare(s, config); break;
    }
  } catch (const ConfigError& e) {
    s.fail(kExitConfig, "config_error", e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s.finish(seconds);
}

}  // namespace crossdiff
