#include "crossdiff/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "crossdiff/detail/structure_terms.hpp"

namespace crossdiff {

namespace {

double x_log_x(double x) { return x <= kInteriorMargin ? 0.0 : x * std::log(x); }

void require_interior(const Composition& u, const char* what) {
  if (!u.is_interior())
    throw std::domain_error(std::string(what) + " needs a strictly interior composition");
}

}  // namespace

double entropy(const Composition& u) {
  double h = 0.0;
  for (double v : u.values()) h += x_log_x(v);
  return h + x_log_x(u.u0());
}

Eigen::VectorXd entropy_gradient(const Composition& u) {
  require_interior(u, "entropy_gradient");
  const double log_solvent = std::log(u.u0());
  Eigen::VectorXd w(static_cast<Eigen::Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) w(static_cast<Eigen::Index>(i)) = std::log(u[i]) - log_solvent;
  return w;
}

Composition entropy_gradient_inverse(std::span<const double> w) {
  double shift = 0.0;
  for (double v : w) {
    if (!std::isfinite(v)) throw std::invalid_argument("entropy variables must be finite");
    shift = std::max(shift, v);
  }
  std::vector<double> e(w.size());
  double denom = std::exp(-shift);
  for (std::size_t i = 0; i < w.size(); ++i) {
    e[i] = std::exp(w[i] - shift);
    denom += e[i];
  }
  for (auto& v : e) v /= denom;
  // Rounding can leave rho a few ulps above one when the solvent fraction is
  // below machine precision; renormalise onto the boundary in that case.
  auto total = [&e] {
    double s = 0.0;
    for (double v : e) s += v;
    return s;
  };
  for (double rho = total(); rho > 1.0; rho = total()) {
    auto largest = std::max_element(e.begin(), e.end());
    *largest = std::nextafter(*largest, 0.0);
  }
  return Composition::make(std::move(e));
}

Eigen::MatrixXd entropy_hessian(const Composition& u) {
  require_interior(u, "entropy_hessian");
  return detail::hessian<double>(u.values());
}

Eigen::MatrixXd entropy_hessian_inverse(const Composition& u) {
  return detail::hessian_inverse<double>(u.values());
}

}  // namespace crossdiff
