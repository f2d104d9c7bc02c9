#include "crossdiff/fv_fixed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossdiff/detail/structure_terms.hpp"
#include "crossdiff/entropy.hpp"
#include "crossdiff/mobility.hpp"
#include "fv_engine.hpp"

namespace crossdiff {

namespace {

constexpr double kInitialClamp = 1e-12;

// Pulls a point of D at least `margin` away from every face of D.
std::vector<double> pull_inside(std::vector<double> u, double margin) {
  for (auto& v : u) v = std::max(v, margin);
  double rho = 0.0;
  for (double v : u) rho += v;
  if (rho > 1.0 - margin) {
    const double scale = (1.0 - margin) / rho;
    for (auto& v : u) v *= scale;
  }
  return u;
}

}  // namespace

Grid1D::Grid1D(double length_, std::size_t cells_) : length(length_), cells(cells_) {
  if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("grid length must be positive");
  if (cells < 2) throw std::invalid_argument("grid needs at least two cells");
}

Field::Field(Grid1D grid, std::size_t species, std::vector<double> w)
    : grid_(grid), n_(species), w_(std::move(w)) {
  if (n_ == 0) throw std::invalid_argument("field needs at least one species");
  if (w_.size() != grid_.cells * n_) throw std::invalid_argument("field size does not match grid");
  for (double v : w_)
    if (!std::isfinite(v)) throw std::invalid_argument("entropy variables must be finite");
}

Field Field::from_compositions(const Grid1D& grid, const std::vector<std::vector<double>>& u) {
  if (u.size() != grid.cells) throw std::invalid_argument("one composition per cell expected");
  const std::size_t n = u.empty() ? 0 : u.front().size();
  const auto report = validate_initial(u, n);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "initial data leaves D at cell " << report.violations.front().cell << ": "
        << report.violations.front().reason;
    throw std::invalid_argument(msg.str());
  }
  std::vector<double> w;
  w.reserve(grid.cells * n);
  for (const auto& cell : u) {
    const auto g = entropy_gradient(Composition::make(pull_inside(cell, kInitialClamp)));
    w.insert(w.end(), g.data(), g.data() + g.size());
  }
  return Field(grid, n, std::move(w));
}

Field Field::from_profile(const Grid1D& grid, std::size_t species,
                          const std::function<std::vector<double>(double)>& profile) {
  std::vector<std::vector<double>> u(grid.cells);
  for (std::size_t k = 0; k < grid.cells; ++k) {
    u[k] = profile(grid.center(k));
    if (u[k].size() != species) throw std::invalid_argument("profile returned the wrong number of species");
  }
  return from_compositions(grid, u);
}

Composition Field::at(std::size_t cell) const { return entropy_gradient_inverse(w(cell)); }

std::vector<Composition> Field::compositions() const {
  std::vector<Composition> out;
  out.reserve(cells());
  for (std::size_t k = 0; k < cells(); ++k) out.push_back(at(k));
  return out;
}

std::vector<double> Field::masses() const {
  std::vector<double> m(n_ + 1, 0.0);
  const double dx = grid_.dx();
  for (std::size_t k = 0; k < cells(); ++k) {
    const auto u = at(k);
    m[0] += u.u0() * dx;
    for (std::size_t i = 0; i < n_; ++i) m[i + 1] += u[i] * dx;
  }
  return m;
}

double Field::total_entropy() const {
  double s = 0.0;
  for (std::size_t k = 0; k < cells(); ++k) s += entropy(at(k));
  return s * grid_.dx();
}

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (newton_max_iter < 1) throw std::invalid_argument("newton_max_iter must be at least 1");
  if (!(dt_min > 0.0)) throw std::invalid_argument("dt_min must be positive");
}

Eigen::VectorXd face_flux(const Composition& uL, const Composition& uR, const CoefficientMatrix& k, double dx) {
  if (uL.size() != uR.size()) throw std::invalid_argument("face states differ in size");
  std::vector<double> mean(uL.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = 0.5 * (uL[i] + uR[i]);
  if (mean.size() != k.species()) throw std::invalid_argument("face states and K disagree on species count");
  return detail::mobility<double>(std::span<const double>(mean), k) * (uR.vector() - uL.vector()) / dx;
}

namespace {

void advance(const Grid1D& grid, std::size_t n, std::vector<double>& w, const CoefficientMatrix& k, double t,
             double dt, const SolverConfig& config, StepStats& stats) {
  detail::ConservativeStep problem;
  problem.cells = grid.cells;
  problem.h = grid.dx();
  detail::NewtonSettings settings{config.newton_tol, config.newton_max_iter};

  std::vector<double> next = w;
  const auto outcome = detail::solve_conservative_step(problem, k, dt, w, next, settings);
  stats.newton_iterations += outcome.iterations;
  if (outcome.converged) {
    w = std::move(next);
    return;
  }
  if (dt / 2.0 < config.dt_min) {
    std::ostringstream msg;
    msg << "Newton did not converge at t = " << t << " with dt = " << dt << " (residual " << outcome.residual
        << ")";
    throw NonConvergence(msg.str(), t, outcome.residual);
  }
  stats.substeps += 1;
  advance(grid, n, w, k, t, dt / 2.0, config, stats);
  advance(grid, n, w, k, t + dt / 2.0, dt / 2.0, config, stats);
}

}  // namespace

StepResult step(const Field& field, const CoefficientMatrix& k, double dt, const SolverConfig& config) {
  if (field.species() != k.species()) throw std::invalid_argument("field and K disagree on species count");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<double> w(field.w().begin(), field.w().end());
  StepStats stats;
  advance(field.grid(), field.species(), w, k, 0.0, dt, config, stats);
  return {Field(field.grid(), field.species(), std::move(w)), stats};
}

Diagnostics diagnose(const Field& field, double t, int newton_iterations) {
  return {t, field.masses(), field.total_entropy(), newton_iterations};
}

Trajectory run(const Field& initial, const CoefficientMatrix& k, const SolverConfig& config) {
  config.validate();
  if (initial.species() != k.species()) throw std::invalid_argument("field and K disagree on species count");
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.fields.push_back(initial);
  traj.diagnostics.push_back(diagnose(initial, 0.0, 0));

  const auto steps = static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));
  std::vector<double> w(initial.w().begin(), initial.w().end());
  double t = 0.0;
  for (std::size_t s = 1; s <= steps; ++s) {
    const double t_next = (s == steps) ? config.t_end : static_cast<double>(s) * config.dt;
    StepStats stats;
    try {
      advance(initial.grid(), initial.species(), w, k, t, t_next - t, config, stats);
    } catch (const NonConvergence& e) {
      throw RunAborted(e, std::move(traj));
    }
    t = t_next;
    Field f(initial.grid(), initial.species(), w);
    traj.diagnostics.push_back(diagnose(f, t, stats.newton_iterations));
    traj.times.push_back(t);
    traj.fields.push_back(std::move(f));
  }
  return traj;
}

}  // namespace crossdiff
