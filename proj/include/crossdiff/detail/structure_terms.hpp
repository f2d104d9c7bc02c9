#pragma once

// Entry formulas for the entropy Hessian and the mobility-related matrices,
// templated on the scalar so the structure check can run in long double.

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "crossdiff/simplex.hpp"

namespace crossdiff::detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
T sum_of(std::span<const T> u) {
  T s = 0;
  for (T v : u) s += v;
  return s;
}

// H_ii = 1/u_i + 1/(1-rho), H_ij = 1/(1-rho).
template <class T>
Mat<T> hessian(std::span<const T> u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  const T c = T(1) / (T(1) - sum_of(u));
  Mat<T> h = Mat<T>::Constant(n, n, c);
  for (Eigen::Index i = 0; i < n; ++i) h(i, i) = T(1) / u[i] + c;
  return h;
}

// (D^2 h)^{-1}: diag(u) - u u^T.
template <class T>
Mat<T> hessian_inverse(std::span<const T> u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Mat<T> g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = (i == j ? u[i] : T(0)) - u[i] * u[j];
  return g;
}

// A_ii = sum_{j != i} (K_ij - K_i0) u_j + K_i0, A_ij = -(K_ij - K_i0) u_i.
// `shift` lowers every coefficient, giving the tilde-A variant.
template <class T>
Mat<T> mobility(std::span<const T> u, const CoefficientMatrix& k, T shift = 0) {
  const std::size_t n = u.size();
  Mat<T> a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const T ki0 = T(k(i + 1, 0)) - shift;
    T diag = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const T kij = T(k(i + 1, j + 1)) - shift;
      diag += (kij - ki0) * u[j];
      a(i, j) = -(kij - ki0) * u[i];
    }
    a(i, i) = diag + ki0;
  }
  return a;
}

template <class T>
Mat<T> lambda(std::span<const T> u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Mat<T> l = Mat<T>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) l(i, i) = T(1) / u[i];
  return l;
}

// P_ii = 1 - u_i, P_ij = -u_i.
template <class T>
Mat<T> p_matrix(std::span<const T> u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Mat<T> p(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) p(i, j) = (i == j ? T(1) : T(0)) - u[i];
  return p;
}

// D_ij = u_i.
template <class T>
Mat<T> d_matrix(std::span<const T> u) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Mat<T> d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d.row(i).setConstant(u[i]);
  return d;
}

// M_ii = (K_i0 - a)(1-rho) u_i + sum_{j != i} (K_ij - a) u_i u_j,
// M_ij = -(K_ij - a) u_i u_j. The product u_i u_j is formed first so that
// M_ij and M_ji are bitwise equal.
template <class T>
Mat<T> m_matrix(std::span<const T> u, const CoefficientMatrix& k, T shift) {
  const std::size_t n = u.size();
  const T solvent = T(1) - sum_of(u);
  Mat<T> m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    T diag = (T(k(i + 1, 0)) - shift) * solvent * u[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const T kij = T(k(i + 1, j + 1)) - shift;
      const T uu = i < j ? u[i] * u[j] : u[j] * u[i];
      diag += kij * uu;
      m(i, j) = -kij * uu;
    }
    m(i, i) = diag;
  }
  return m;
}

}  // namespace crossdiff::detail
