#pragma once

// Implicit conservative update shared by the fixed-domain and moving-domain
// solvers. For cells k = 0..N-1 of width h it solves
//
//   (s_new u_k - s_old u_k^old) h - dt (G_{k+1/2} - G_{k-1/2}) = 0,
//   G_{k+1/2} = c A(mean u) (u_{k+1} - u_k) / h + xi_{k+1/2} b u_{k+1},
//   G_{-1/2} = 0,   G_{N-1/2} = right_flux,
//
// for the entropy variables of the new state.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "crossdiff/simplex.hpp"

namespace crossdiff::detail {

struct ConservativeStep {
  std::size_t cells = 0;
  double h = 0.0;
  double scale_old = 1.0;
  double scale_new = 1.0;
  double diffusion_scale = 1.0;
  double drift = 0.0;
  Eigen::VectorXd right_flux;  // empty means zero
};

struct NewtonSettings {
  double tol = 1e-11;
  int max_iter = 30;
};

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// `w` holds the initial guess on entry and the solution on exit.
NewtonOutcome solve_conservative_step(const ConservativeStep& problem, const CoefficientMatrix& k, double dt,
                                      std::span<const double> w_old, std::vector<double>& w,
                                      const NewtonSettings& settings);

}  // namespace crossdiff::detail
