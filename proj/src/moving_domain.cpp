#include "crossdiff/moving_domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fv_engine.hpp"

namespace crossdiff {

FluxSchedule::FluxSchedule(std::vector<double> breakpoints, std::vector<std::vector<double>> values,
                           double horizon)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)), horizon_(horizon) {
  if (breakpoints_.empty() || breakpoints_.front() != 0.0)
    throw std::invalid_argument("flux schedule must start at t = 0");
  if (breakpoints_.size() != values_.size())
    throw std::invalid_argument("flux schedule needs one flux vector per interval");
  if (!(horizon_ > breakpoints_.back()) || !std::isfinite(horizon_))
    throw std::invalid_argument("flux schedule horizon must exceed the last breakpoint");
  for (std::size_t j = 1; j < breakpoints_.size(); ++j)
    if (!(breakpoints_[j] > breakpoints_[j - 1])) throw std::invalid_argument("breakpoints must increase strictly");
  if (values_.front().size() < 2) throw std::invalid_argument("fluxes need at least two species");
  species_ = values_.front().size() - 1;
  for (const auto& v : values_) {
    if (v.size() != species_ + 1) throw std::invalid_argument("flux vectors differ in length");
    for (double phi : v)
      if (!std::isfinite(phi) || phi < 0.0) throw std::invalid_argument("fluxes must be nonnegative");
  }
}

FluxSchedule FluxSchedule::constant(std::vector<double> phi, double horizon) {
  return FluxSchedule({0.0}, {std::move(phi)}, horizon);
}

std::size_t FluxSchedule::interval(double t) const {
  if (!(t >= 0.0 && t <= horizon_)) throw std::out_of_range("time outside the flux schedule");
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

double FluxSchedule::total(double t) const {
  double s = 0.0;
  for (double phi : at(t)) s += phi;
  return s;
}

double FluxSchedule::next_breakpoint(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return it == breakpoints_.end() ? horizon_ : *it;
}

std::vector<double> FluxSchedule::deposited(double t) const {
  const std::size_t last = interval(t);
  std::vector<double> out(species_ + 1, 0.0);
  for (std::size_t j = 0; j <= last; ++j) {
    const double len = (j == last ? t : breakpoints_[j + 1]) - breakpoints_[j];
    for (std::size_t i = 0; i <= species_; ++i) out[i] += len * values_[j][i];
  }
  return out;
}

double thickness(const FluxSchedule& schedule, double e0, double t) {
  const std::size_t last = schedule.interval(t);
  const auto& b = schedule.breakpoints();
  double e = e0;
  for (std::size_t j = 0; j <= last; ++j) {
    const double len = (j == last ? t : b[j + 1]) - b[j];
    e += len * schedule.total(b[j]);
  }
  return e;
}

namespace {

void require_reference_grid(const Field& field) {
  if (field.grid().length != 1.0) throw std::invalid_argument("moving-domain fields live on the reference grid (0, 1)");
}

void advance_moving(std::vector<double>& w, const Grid1D& grid, const CoefficientMatrix& k,
                    const MovingDomain& domain, double t, double dt, const SolverConfig& config, StepStats& stats) {
  const double t_new = t + dt;
  const auto& phi = domain.schedule.at(t);
  detail::ConservativeStep problem;
  problem.cells = grid.cells;
  problem.h = grid.dx();
  problem.scale_old = domain.e(t);
  problem.scale_new = domain.e(t_new);
  problem.diffusion_scale = 1.0 / problem.scale_new;
  problem.drift = domain.schedule.total(t);
  problem.right_flux = Eigen::Map<const Eigen::VectorXd>(phi.data() + 1, static_cast<Eigen::Index>(k.species()));

  std::vector<double> next = w;
  const auto outcome = detail::solve_conservative_step(problem, k, dt, w, next,
                                                       {config.newton_tol, config.newton_max_iter});
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
  advance_moving(w, grid, k, domain, t, dt / 2.0, config, stats);
  advance_moving(w, grid, k, domain, t + dt / 2.0, dt / 2.0, config, stats);
}

Diagnostics moving_diagnostics(const Field& field, double t, double e, int iterations) {
  Diagnostics d;
  d.t = t;
  d.masses = physical_masses(field, e);
  d.entropy = field.total_entropy() * e;
  d.newton_iterations = iterations;
  return d;
}

}  // namespace

StepResult step_moving(const Field& field, const CoefficientMatrix& k, const MovingDomain& domain, double t,
                       double dt, const SolverConfig& config) {
  require_reference_grid(field);
  if (field.species() != k.species() || domain.schedule.species() != k.species())
    throw std::invalid_argument("field, K and fluxes disagree on species count");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (t + dt > domain.schedule.next_breakpoint(t) * (1.0 + 1e-14))
    throw std::invalid_argument("moving step crosses a flux breakpoint");
  std::vector<double> w(field.w().begin(), field.w().end());
  StepStats stats;
  advance_moving(w, field.grid(), k, domain, t, dt, config, stats);
  return {Field(field.grid(), field.species(), std::move(w)), stats};
}

std::vector<double> physical_masses(const Field& reference, double e) {
  auto m = reference.masses();
  for (auto& v : m) v *= e;
  return m;
}

MovingTrajectory run_moving(const Field& initial, const CoefficientMatrix& k, const MovingDomain& domain,
                            const SolverConfig& config) {
  config.validate();
  require_reference_grid(initial);
  if (initial.species() != k.species() || domain.schedule.species() != k.species())
    throw std::invalid_argument("field, K and fluxes disagree on species count");
  if (!(domain.e0 > 0.0)) throw std::invalid_argument("initial thickness must be positive");
  if (config.t_end > domain.schedule.horizon()) throw std::invalid_argument("t_end exceeds the flux horizon");

  MovingTrajectory traj;
  auto record = [&](const Field& f, double t, int iterations) {
    const double e = domain.e(t);
    traj.times.push_back(t);
    traj.thickness.push_back(e);
    traj.diagnostics.push_back(moving_diagnostics(f, t, e, iterations));
    traj.fields.push_back(f);
  };
  record(initial, 0.0, 0);

  std::vector<double> w(initial.w().begin(), initial.w().end());
  double t = 0.0;
  std::size_t s = 0;
  while (t < config.t_end) {
    // regular grid of step ends, cut at breakpoints
    double target = std::min(config.t_end, static_cast<double>(s + 1) * config.dt);
    if (target <= t) {
      ++s;
      continue;
    }
    const double breakpoint = domain.schedule.next_breakpoint(t);
    const bool cut = breakpoint < target;
    if (cut) target = breakpoint;
    if (config.t_end - target < 1e-12 * std::max(1.0, config.t_end)) target = config.t_end;
    StepStats stats;
    try {
      advance_moving(w, initial.grid(), k, domain, t, target - t, config, stats);
    } catch (const NonConvergence& e) {
      throw MovingRunAborted(e, std::move(traj));
    }
    t = target;
    if (!cut) ++s;
    record(Field(initial.grid(), initial.species(), w), t, stats.newton_iterations);
  }
  return traj;
}

double MassBalanceReport::max_defect() const {
  double m = 0.0;
  for (const auto& s : species) m = std::max(m, s.max_defect);
  return m;
}

MassBalanceReport mass_balance(const MovingTrajectory& trajectory, const MovingDomain& domain) {
  MassBalanceReport report;
  if (trajectory.fields.empty()) return report;
  const std::size_t n = trajectory.fields.front().species();
  report.species.resize(n + 1);
  report.times = trajectory.times;
  const auto initial = physical_masses(trajectory.fields.front(), trajectory.thickness.front());
  for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
    const double t = trajectory.times[s];
    const auto mass = physical_masses(trajectory.fields[s], trajectory.thickness[s]);
    const auto dep = domain.schedule.deposited(t);
    for (std::size_t i = 0; i <= n; ++i) {
      const double defect = std::abs(mass[i] - initial[i] - dep[i]);
      auto& b = report.species[i];
      b.defects.push_back(defect);
      if (defect > b.max_defect) {
        b.max_defect = defect;
        b.time_of_max = t;
      }
    }
  }
  for (double d : domain.schedule.deposited(trajectory.times.back())) report.total_deposited += d;
  return report;
}

nlohmann::json to_json(const MassBalanceReport& report) {
  nlohmann::json species = nlohmann::json::array();
  for (std::size_t i = 0; i < report.species.size(); ++i)
    species.push_back({{"species", i},
                       {"max_defect", report.species[i].max_defect},
                       {"time_of_max", report.species[i].time_of_max}});
  return {{"species", species}, {"max_defect", report.max_defect()}, {"total_deposited", report.total_deposited}};
}

}  // namespace crossdiff
