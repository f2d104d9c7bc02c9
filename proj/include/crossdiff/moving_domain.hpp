#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "crossdiff/fv_fixed.hpp"

namespace crossdiff {

/**
 * Piecewise-constant, right-continuous deposition fluxes (phi_0, ..., phi_n)
 * on [0, horizon]. Interval j is [breakpoints[j], breakpoints[j+1]), the last
 * one closed at the horizon.
 */
class FluxSchedule {
 public:
  /// breakpoints must start at 0, increase strictly and stay below horizon;
  /// one vector of n+1 nonnegative fluxes per interval.
  FluxSchedule(std::vector<double> breakpoints, std::vector<std::vector<double>> values, double horizon);
  /// A single interval of constant fluxes.
  static FluxSchedule constant(std::vector<double> phi, double horizon);

  std::size_t species() const { return species_; }  // n, excluding species 0
  double horizon() const { return horizon_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  std::size_t interval(double t) const;
  /// (phi_0, ..., phi_n) at t.
  const std::vector<double>& at(double t) const { return values_[interval(t)]; }
  /// sum_i phi_i(t) = e'(t).
  double total(double t) const;
  /// First breakpoint strictly after t, or the horizon.
  double next_breakpoint(double t) const;
  /// int_0^t phi_i(s) ds for each species 0..n, exact for the piecewise-constant law.
  std::vector<double> deposited(double t) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> values_;
  double horizon_;
  std::size_t species_;
};

/// e(t) = e0 + int_0^t sum_i phi_i. Throws std::out_of_range for t outside [0, T].
double thickness(const FluxSchedule& schedule, double e0, double t);

struct MovingDomain {
  FluxSchedule schedule;
  double e0 = 1.0;

  double e(double t) const { return thickness(schedule, e0, t); }
  double rate(double t) const { return schedule.total(t); }
  /// Physical position x = xi e(t) of the reference coordinate xi in (0, 1).
  double physical(double xi, double t) const { return xi * e(t); }
};

/**
 * Implicit Euler step of the reference-domain form
 *   d/dt (e v) = d/dxi ( (1/e) A(v) dv/dxi + xi e' v )  on (0, 1),
 * with zero flux at xi = 0 and (phi_1, ..., phi_n) at xi = 1; e and e' are
 * taken at t + dt. The field must live on a grid of length 1, and the step
 * must not cross a flux breakpoint. Halves dt on Newton failure like step().
 */
StepResult step_moving(const Field& field, const CoefficientMatrix& k, const MovingDomain& domain, double t,
                       double dt, const SolverConfig& config);

struct MovingTrajectory {
  std::vector<double> times;
  std::vector<double> thickness;
  std::vector<Field> fields;  // reference coordinates
  std::vector<Diagnostics> diagnostics;  // masses and entropy in physical units
};

class MovingRunAborted : public NonConvergence {
 public:
  MovingRunAborted(const NonConvergence& cause, MovingTrajectory partial)
      : NonConvergence(cause), partial_(std::move(partial)) {}
  const MovingTrajectory& partial() const { return partial_; }

 private:
  MovingTrajectory partial_;
};

/// Steps to config.t_end (which must not exceed the schedule horizon), cutting
/// steps at every flux breakpoint.
MovingTrajectory run_moving(const Field& initial, const CoefficientMatrix& k, const MovingDomain& domain,
                            const SolverConfig& config);

/// Masses of species 0..n in physical units: e(t) sum_k v_k dxi.
std::vector<double> physical_masses(const Field& reference, double e);

struct SpeciesBalance {
  double max_defect = 0.0;
  double time_of_max = 0.0;
  /// defect at every stored time
  std::vector<double> defects;
};

struct MassBalanceReport {
  std::vector<double> times;
  std::vector<SpeciesBalance> species;  // 0..n
  double total_deposited = 0.0;  // sum over species of int_0^T phi_i
  double max_defect() const;
};

/// |e(t) int v_i dxi - int u_i^0 - int_0^t phi_i| per species and stored time.
MassBalanceReport mass_balance(const MovingTrajectory& trajectory, const MovingDomain& domain);

nlohmann::json to_json(const MassBalanceReport& report);

}  // namespace crossdiff
