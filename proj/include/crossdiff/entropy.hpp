#pragma once

// The mixing entropy h(u) = sum_i u_i ln u_i + (1-rho) ln(1-rho) on D and the
// change of variables between volume fractions u and entropy variables w = Dh(u).

#include <span>

#include <Eigen/Core>

#include "crossdiff/simplex.hpp"

namespace crossdiff {

/// Entropy density. Uses 0 ln 0 = 0 for fractions at or below 1e-14, so the
/// value lies in [-ln(n+1), 0] on all of D.
double entropy(const Composition& u);

/// w_i = ln u_i - ln(1 - rho). Requires a strictly interior point.
Eigen::VectorXd entropy_gradient(const Composition& u);

/// u_i = e^{w_i} / (1 + sum_j e^{w_j}), evaluated with the exponents shifted by
/// max(0, max_i w_i) so that large entropy variables cannot overflow. For very
/// large w the result saturates onto the boundary of D in double precision.
Composition entropy_gradient_inverse(std::span<const double> w);
inline Composition entropy_gradient_inverse(const Eigen::VectorXd& w) {
  return entropy_gradient_inverse(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

/// D^2 h(u). Requires a strictly interior point.
Eigen::MatrixXd entropy_hessian(const Composition& u);

/// (D^2 h(u))^{-1} = diag(u) - u u^T, i.e. the Jacobian du/dw. Defined on all of D.
Eigen::MatrixXd entropy_hessian_inverse(const Composition& u);

}  // namespace crossdiff
