#include "crossdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace crossdiff {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(key, "expected a finite number");
  return x;
}

std::size_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> fractions(const json& v, const std::string& key, std::size_t n) {
  auto out = numbers(v, key);
  if (out.size() != n) fail(key, "expected " + std::to_string(n) + " entries, one per species 1..n");
  return out;
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

void check_simplex(const std::vector<double>& u, const std::string& key) {
  const auto report = validate_initial({u}, u.size());
  if (!report.ok()) fail(key, "not in D: " + report.violations.front().reason);
}

InitialProfile parse_initial(const json& v, std::size_t n) {
  check_keys(v, "initial", {"preset", "values", "mean", "amplitude", "mode", "left", "right", "position"});
  const auto* preset = find(v, "preset");
  if (!preset || !preset->is_string()) fail("initial.preset", "expected one of uniform, cosine, step");
  InitialProfile p;
  const auto name = preset->get<std::string>();
  auto required = [&](const char* key) -> const json& {
    const auto* x = find(v, key);
    if (!x) fail(std::string("initial.") + key, "required for preset " + name);
    return *x;
  };
  if (name == "uniform") {
    p.kind = InitialProfile::Kind::uniform;
    p.values = fractions(required("values"), "initial.values", n);
    check_simplex(p.values, "initial.values");
  } else if (name == "cosine") {
    p.kind = InitialProfile::Kind::cosine;
    p.mean = fractions(required("mean"), "initial.mean", n);
    p.amplitude = fractions(required("amplitude"), "initial.amplitude", n);
    p.mode.assign(n, 1);
    if (const auto* m = find(v, "mode")) {
      if (m->is_number_integer()) {
        p.mode.assign(n, m->get<int>());
      } else {
        const auto modes = fractions(*m, "initial.mode", n);
        for (std::size_t i = 0; i < n; ++i) {
          if (modes[i] != std::floor(modes[i])) fail("initial.mode", "expected integers");
          p.mode[i] = static_cast<int>(modes[i]);
        }
      }
    }
    // extreme values of mean_i + a_i c_i over c in [-1, 1]^n
    double rho_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.mean[i] - std::abs(p.amplitude[i]) < 0.0) fail("initial", "cosine preset leaves u_i >= 0");
      rho_max += p.mean[i] + std::abs(p.amplitude[i]);
    }
    if (rho_max > 1.0) fail("initial", "cosine preset can exceed rho = 1");
  } else if (name == "step") {
    p.kind = InitialProfile::Kind::step;
    p.left = fractions(required("left"), "initial.left", n);
    p.right = fractions(required("right"), "initial.right", n);
    check_simplex(p.left, "initial.left");
    check_simplex(p.right, "initial.right");
    if (const auto* pos = find(v, "position")) p.position = number(*pos, "initial.position");
    if (!(p.position > 0.0 && p.position < 1.0)) fail("initial.position", "expected a value in (0, 1)");
  } else {
    fail("initial.preset", "unknown preset '" + name + "'");
  }
  return p;
}

FluxSchedule parse_flux(const json& v, std::size_t n) {
  check_keys(v, "flux", {"breakpoints", "values", "horizon"});
  const auto* values = find(v, "values");
  const auto* horizon = find(v, "horizon");
  if (!values || !values->is_array() || values->empty()) fail("flux.values", "expected one flux vector per interval");
  if (!horizon) fail("flux.horizon", "required");
  std::vector<double> breaks{0.0};
  if (const auto* b = find(v, "breakpoints")) breaks = numbers(*b, "flux.breakpoints");
  std::vector<std::vector<double>> phi;
  for (std::size_t j = 0; j < values->size(); ++j) {
    const std::string key = "flux.values[" + std::to_string(j) + "]";
    auto row = numbers((*values)[j], key);
    if (row.size() != n + 1) fail(key, "expected n + 1 = " + std::to_string(n + 1) + " fluxes (species 0..n)");
    for (double x : row)
      if (x < 0.0) fail(key, "fluxes must be nonnegative");
    phi.push_back(std::move(row));
  }
  try {
    return FluxSchedule(breaks, phi, number(*horizon, "flux.horizon"));
  } catch (const std::invalid_argument& e) {
    fail("flux", e.what());
  }
}

void parse_solver(const json& v, ExperimentConfig& c) {
  check_keys(v, "solver", {"dt", "t_end", "newton_tol", "newton_max_iter", "dt_min", "output_every"});
  if (const auto* x = find(v, "dt")) c.solver.dt = number(*x, "solver.dt");
  if (const auto* x = find(v, "t_end")) c.solver.t_end = number(*x, "solver.t_end");
  if (const auto* x = find(v, "newton_tol")) c.solver.newton_tol = number(*x, "solver.newton_tol");
  if (const auto* x = find(v, "newton_max_iter")) c.solver.newton_max_iter = static_cast<int>(count(*x, "solver.newton_max_iter"));
  if (const auto* x = find(v, "dt_min")) c.solver.dt_min = number(*x, "solver.dt_min");
  if (const auto* x = find(v, "output_every")) c.output_every = count(*x, "solver.output_every");
  if (c.output_every == 0) fail("solver.output_every", "must be at least 1");
  try {
    c.solver.validate();
  } catch (const std::invalid_argument& e) {
    fail("solver", e.what());
  }
}

void parse_lattice(const json& v, ExperimentConfig& c) {
  check_keys(v, "lattice", {"sites", "replicas", "bins", "times"});
  if (const auto* x = find(v, "sites")) c.lattice.sites = count(*x, "lattice.sites");
  if (const auto* x = find(v, "replicas")) c.lattice.replicas = count(*x, "lattice.replicas");
  if (const auto* x = find(v, "bins")) c.lattice.bins = count(*x, "lattice.bins");
  const auto* times = find(v, "times");
  if (!times) fail("lattice.times", "required");
  c.lattice.times = numbers(*times, "lattice.times");
  if (c.lattice.times.empty()) fail("lattice.times", "expected at least one output time");
  for (std::size_t i = 0; i < c.lattice.times.size(); ++i)
    if (c.lattice.times[i] < 0.0 || (i > 0 && c.lattice.times[i] <= c.lattice.times[i - 1]))
      fail("lattice.times", "expected strictly increasing times >= 0");
  if (c.lattice.sites < 2) fail("lattice.sites", "must be at least 2");
  if (c.lattice.replicas == 0) fail("lattice.replicas", "must be at least 1");
  if (c.lattice.bins == 0 || c.lattice.sites % c.lattice.bins != 0) fail("lattice.bins", "must divide lattice.sites");
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::fixed: return "fixed";
    case Mode::moving: return "moving";
    case Mode::check_structure: return "check-structure";
    case Mode::lattice: return "lattice";
    case Mode::compare: return "compare";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  for (Mode m : {Mode::fixed, Mode::moving, Mode::check_structure, Mode::lattice, Mode::compare})
    if (to_string(m) == name) return m;
  fail("mode", "unknown mode '" + name + "'");
}

std::vector<double> InitialProfile::operator()(double x, double length) const {
  switch (kind) {
    case Kind::uniform: return values;
    case Kind::step: return x < position * length ? left : right;
    case Kind::cosine: {
      std::vector<double> u(mean.size());
      for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = mean[i] + amplitude[i] * std::cos(mode[i] * std::numbers::pi * x / length);
      return u;
    }
  }
  return {};
}

ExperimentConfig parse_config(const json& doc, Mode mode) {
  check_keys(doc, "", {"mode", "species", "K", "grid", "solver", "initial", "flux", "structure", "lattice", "seed",
                       "threads", "output"});
  ExperimentConfig c;
  if (const auto* m = find(doc, "mode")) {
    if (!m->is_string()) fail("mode", "expected a string");
    c.mode = mode_from_string(m->get<std::string>());
    if (*c.mode != mode) fail("mode", "config is for '" + m->get<std::string>() + "', not '" + to_string(mode) + "'");
  }
  c.mode = mode;

  const auto* species = find(doc, "species");
  if (!species) fail("species", "required");
  c.species = count(*species, "species");
  if (c.species == 0) fail("species", "must be at least 1");
  const std::size_t n = c.species;

  const auto* k = find(doc, "K");
  if (!k || !k->is_array() || k->size() != n + 1) fail("K", "expected an (n+1) x (n+1) matrix");
  for (std::size_t i = 0; i <= n; ++i) {
    const std::string key = "K[" + std::to_string(i) + "]";
    auto row = numbers((*k)[i], key);
    if (row.size() != n + 1) fail(key, "expected n + 1 entries");
    c.k.push_back(std::move(row));
  }
  try {
    (void)CoefficientMatrix::from_full(c.k);
  } catch (const std::invalid_argument& e) {
    fail("K", e.what());
  }

  if (const auto* s = find(doc, "seed")) c.seed = count(*s, "seed");
  if (const auto* t = find(doc, "threads")) c.threads = static_cast<unsigned>(std::max<std::size_t>(1, count(*t, "threads")));
  if (const auto* o = find(doc, "output")) {
    if (!o->is_string() || o->get<std::string>().empty()) fail("output", "expected a directory path");
    c.output = o->get<std::string>();
  }

  const bool needs_pde = mode == Mode::fixed || mode == Mode::moving || mode == Mode::compare;
  const bool needs_profile = needs_pde || mode == Mode::lattice;

  if (needs_pde || needs_profile) {
    const auto* grid = find(doc, "grid");
    if (grid) {
      check_keys(*grid, "grid", {"cells", "length", "e0"});
      if (const auto* x = find(*grid, "cells")) c.cells = count(*x, "grid.cells");
      const char* len_key = mode == Mode::moving ? "e0" : "length";
      if (find(*grid, mode == Mode::moving ? "length" : "e0"))
        fail("grid", mode == Mode::moving ? "moving mode takes grid.e0, not grid.length"
                                          : "grid.e0 is only used in moving mode");
      if (const auto* x = find(*grid, len_key)) c.length = number(*x, std::string("grid.") + len_key);
    } else if (needs_pde) {
      fail("grid", "required");
    }
    if (c.cells < 2) fail("grid.cells", "must be at least 2");
    if (!(c.length > 0.0)) fail(mode == Mode::moving ? "grid.e0" : "grid.length", "must be positive");
  }
  if (needs_pde) {
    const auto* solver = find(doc, "solver");
    if (!solver) fail("solver", "required");
    parse_solver(*solver, c);
  }
  if (needs_profile) {
    const auto* initial = find(doc, "initial");
    if (!initial) fail("initial", "required");
    c.initial = parse_initial(*initial, n);
  }
  if (mode == Mode::moving) {
    const auto* flux = find(doc, "flux");
    if (!flux) fail("flux", "required in moving mode");
    c.flux = parse_flux(*flux, n);
    if (c.solver.t_end > c.flux->horizon()) fail("solver.t_end", "exceeds flux.horizon");
  } else if (find(doc, "flux")) {
    fail("flux", "only used in moving mode");
  }
  if (mode == Mode::check_structure) {
    if (const auto* s = find(doc, "structure")) {
      check_keys(*s, "structure", {"samples", "directions"});
      if (const auto* x = find(*s, "samples")) c.structure_samples = count(*x, "structure.samples");
      if (const auto* x = find(*s, "directions")) c.structure_directions = count(*x, "structure.directions");
    }
    if (c.structure_samples == 0) fail("structure.samples", "must be at least 1");
  }
  if (mode == Mode::lattice || mode == Mode::compare) {
    const auto* l = find(doc, "lattice");
    if (!l) fail("lattice", "required");
    parse_lattice(*l, c);
    if (mode == Mode::compare && c.cells % c.lattice.bins != 0) fail("grid.cells", "must be a multiple of lattice.bins");
  }
  return c;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace crossdiff
