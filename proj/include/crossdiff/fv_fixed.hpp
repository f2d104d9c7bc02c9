#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crossdiff/simplex.hpp"

namespace crossdiff {

/// Uniform cell-centred grid on (0, length).
struct Grid1D {
  double length = 1.0;
  std::size_t cells = 2;

  Grid1D() = default;
  /// Throws std::invalid_argument unless length > 0 and cells >= 2.
  Grid1D(double length, std::size_t cells);

  double dx() const { return length / static_cast<double>(cells); }
  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dx(); }
};

/**
 * Per-cell state stored as entropy variables w (cells x n, row-major).
 * Volume fractions are recovered through the inverse entropy gradient, so every
 * cell lies in D and satisfies the volume constraint by construction.
 */
class Field {
 public:
  Field(Grid1D grid, std::size_t species, std::vector<double> w);

  /// Builds w = Dh(u) after pulling each cell 1e-12 into the interior of D.
  /// Throws std::invalid_argument if a cell violates u_i >= 0, rho <= 1.
  static Field from_compositions(const Grid1D& grid, const std::vector<std::vector<double>>& u);
  /// Evaluates `profile(x)` at each cell centre.
  static Field from_profile(const Grid1D& grid, std::size_t species,
                            const std::function<std::vector<double>(double)>& profile);

  const Grid1D& grid() const { return grid_; }
  std::size_t species() const { return n_; }
  std::size_t cells() const { return grid_.cells; }
  std::span<const double> w() const { return w_; }
  std::span<const double> w(std::size_t cell) const { return {w_.data() + cell * n_, n_}; }

  Composition at(std::size_t cell) const;
  std::vector<Composition> compositions() const;

  /// Midpoint-rule integrals of u_0, ..., u_n.
  std::vector<double> masses() const;
  /// sum_k h(u_k) dx.
  double total_entropy() const;

 private:
  Grid1D grid_;
  std::size_t n_;
  std::vector<double> w_;
};

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 0.0;
  /// Infinity norm of the per-cell residual, in mass units.
  double newton_tol = 1e-11;
  int newton_max_iter = 30;
  double dt_min = 1e-10;

  /// Throws std::invalid_argument on dt <= 0, t_end < 0, newton_tol <= 0.
  void validate() const;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double time, double worst_residual)
      : std::runtime_error(what), time_(time), worst_residual_(worst_residual) {}
  double time() const { return time_; }
  double worst_residual() const { return worst_residual_; }

 private:
  double time_;
  double worst_residual_;
};

struct StepStats {
  int newton_iterations = 0;
  int substeps = 1;
};

struct StepResult {
  Field field;
  StepStats stats;
};

/// A(u_mean) (uR - uL) / dx with u_mean the arithmetic average of the two states.
Eigen::VectorXd face_flux(const Composition& uL, const Composition& uR, const CoefficientMatrix& k, double dx);

/**
 * One implicit Euler step of size dt with zero flux at both ends. The
 * nonlinear system is solved by damped Newton in the entropy variables; a
 * failed solve is retried as two half steps down to config.dt_min.
 * Throws NonConvergence when dt_min is reached.
 */
StepResult step(const Field& field, const CoefficientMatrix& k, double dt, const SolverConfig& config);

struct Diagnostics {
  double t = 0.0;
  std::vector<double> masses;  // species 0..n
  double entropy = 0.0;
  int newton_iterations = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> fields;
  std::vector<Diagnostics> diagnostics;
};

/// Thrown by run(); carries everything computed before the failure.
class RunAborted : public NonConvergence {
 public:
  RunAborted(const NonConvergence& cause, Trajectory partial)
      : NonConvergence(cause), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Steps from t = 0 to config.t_end; the final step is shortened to land on t_end.
Trajectory run(const Field& initial, const CoefficientMatrix& k, const SolverConfig& config);

Diagnostics diagnose(const Field& field, double t, int newton_iterations);

}  // namespace crossdiff
