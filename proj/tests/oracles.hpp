#pragma once

// Reference formulas written independently of the library code paths they check.

#include <cmath>
#include <numbers>
#include <vector>

#include "crossdiff/simplex.hpp"

namespace oracle {

// Flux of the reduced system written directly from its species form:
// sum_{j != i, j >= 1} K_ij (u_j g_i - u_i g_j) + K_i0 ((1 - rho) g_i + u_i grad rho).
inline std::vector<double> reduced_flux(const std::vector<double>& u, const std::vector<double>& g,
                                        const crossdiff::CoefficientMatrix& k) {
  const std::size_t n = u.size();
  double rho = 0.0, grad_rho = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rho += u[i];
    grad_rho += g[i];
  }
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) f[i] += k(i + 1, j + 1) * (u[j] * g[i] - u[i] * g[j]);
    f[i] += k(i + 1, 0) * ((1.0 - rho) * g[i] + u[i] * grad_rho);
  }
  return f;
}

// Neumann heat solution mean + amp exp(-K (m pi / L)^2 t) cos(m pi x / L).
inline double heat_cosine(double t, double x, double K, double length, double mean, double amp, int mode = 1) {
  const double q = mode * std::numbers::pi / length;
  return mean + amp * std::exp(-K * q * q * t) * std::cos(q * x);
}

// Average of the heat cosine over [a, b].
inline double heat_cosine_average(double t, double a, double b, double K, double length, double mean, double amp,
                                  int mode = 1) {
  const double q = mode * std::numbers::pi / length;
  return mean + amp * std::exp(-K * q * q * t) * (std::sin(q * b) - std::sin(q * a)) / (q * (b - a));
}

inline double entropy_direct(const std::vector<double>& u) {
  double rho = 0.0, h = 0.0;
  for (double v : u) {
    rho += v;
    if (v > 0.0) h += v * std::log(v);
  }
  const double s = 1.0 - rho;
  if (s > 0.0) h += s * std::log(s);
  return h;
}

}  // namespace oracle
