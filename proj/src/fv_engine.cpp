#include "fv_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "crossdiff/entropy.hpp"
#include "crossdiff/detail/structure_terms.hpp"
#include "crossdiff/mobility.hpp"

namespace crossdiff::detail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Volume fractions per cell, one column per cell.
MatrixXd fractions(std::span<const double> w, std::size_t cells, std::size_t n) {
  MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cells));
  for (std::size_t k = 0; k < cells; ++k) {
    const auto c = entropy_gradient_inverse(w.subspan(k * n, n));
    u.col(static_cast<Eigen::Index>(k)) = c.vector();
  }
  return u;
}

class Assembler {
 public:
  Assembler(const ConservativeStep& p, const CoefficientMatrix& k, double dt, const MatrixXd& u_old)
      : p_(p), k_(k), dt_(dt), u_old_(u_old), n_(u_old.rows()), cells_(static_cast<Eigen::Index>(p.cells)) {}

  // Mobility at the arithmetic mean of two neighbouring cells.
  MatrixXd face_mobility(const MatrixXd& u, Eigen::Index left) const {
    const VectorXd mean = 0.5 * (u.col(left) + u.col(left + 1));
    return mobility<double>(std::span<const double>(mean.data(), static_cast<std::size_t>(n_)), k_);
  }

  double xi_face(Eigen::Index left) const { return double(left + 1) / double(cells_); }

  VectorXd interior_flux(const MatrixXd& u, Eigen::Index left) const {
    const VectorXd grad = (u.col(left + 1) - u.col(left)) / p_.h;
    VectorXd g = p_.diffusion_scale * (face_mobility(u, left) * grad);
    if (p_.drift != 0.0) g += xi_face(left) * p_.drift * u.col(left + 1);
    return g;
  }

  MatrixXd residual(const MatrixXd& u) const {
    MatrixXd r(n_, cells_);
    VectorXd left_flux = VectorXd::Zero(n_);
    for (Eigen::Index c = 0; c < cells_; ++c) {
      VectorXd right_flux;
      if (c + 1 < cells_) {
        right_flux = interior_flux(u, c);
      } else if (p_.right_flux.size() > 0) {
        right_flux = p_.right_flux;
      } else {
        right_flux = VectorXd::Zero(n_);
      }
      r.col(c) = (p_.scale_new * u.col(c) - p_.scale_old * u_old_.col(c)) * p_.h - dt_ * (right_flux - left_flux);
      left_flux = std::move(right_flux);
    }
    return r;
  }

  // Block-tridiagonal Jacobian with respect to w, stored per cell.
  void jacobian(const MatrixXd& u, std::vector<MatrixXd>& lower, std::vector<MatrixXd>& diag,
                std::vector<MatrixXd>& upper) const {
    const MatrixXd eye = MatrixXd::Identity(n_, n_);
    std::vector<MatrixXd> du_dw(static_cast<std::size_t>(cells_));
    for (Eigen::Index c = 0; c < cells_; ++c) {
      const VectorXd v = u.col(c);
      du_dw[static_cast<std::size_t>(c)] = MatrixXd(v.asDiagonal()) - v * v.transpose();
    }
    // d(flux)/d(u) per interior face, w.r.t. its left and right cells
    std::vector<MatrixXd> d_left(static_cast<std::size_t>(cells_)), d_right(static_cast<std::size_t>(cells_));
    for (Eigen::Index f = 0; f + 1 < cells_; ++f) {
      const VectorXd grad = (u.col(f + 1) - u.col(f)) / p_.h;
      const MatrixXd a = face_mobility(u, f);
      const MatrixXd half_da = 0.5 * mobility_directional_derivative(grad, k_);
      d_left[static_cast<std::size_t>(f)] = p_.diffusion_scale * (half_da - a / p_.h);
      d_right[static_cast<std::size_t>(f)] = p_.diffusion_scale * (half_da + a / p_.h);
      if (p_.drift != 0.0) d_right[static_cast<std::size_t>(f)] += xi_face(f) * p_.drift * eye;
    }
    lower.assign(static_cast<std::size_t>(cells_), MatrixXd());
    diag.assign(static_cast<std::size_t>(cells_), MatrixXd());
    upper.assign(static_cast<std::size_t>(cells_), MatrixXd());
    for (Eigen::Index c = 0; c < cells_; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      MatrixXd du = p_.scale_new * p_.h * eye;
      if (c + 1 < cells_) du -= dt_ * d_left[sc];
      if (c > 0) du += dt_ * d_right[sc - 1];
      diag[sc] = du * du_dw[sc];
      if (c + 1 < cells_) upper[sc] = -dt_ * d_right[sc] * du_dw[sc + 1];
      if (c > 0) lower[sc] = dt_ * d_left[sc - 1] * du_dw[sc - 1];
    }
  }

 private:
  const ConservativeStep& p_;
  const CoefficientMatrix& k_;
  double dt_;
  const MatrixXd& u_old_;
  Eigen::Index n_;
  Eigen::Index cells_;
};

// Block Thomas elimination; overwrites rhs (n x cells) with the solution.
bool solve_block_tridiagonal(const std::vector<MatrixXd>& lower, std::vector<MatrixXd> diag,
                             const std::vector<MatrixXd>& upper, MatrixXd& rhs) {
  const std::size_t cells = diag.size();
  std::vector<Eigen::PartialPivLU<MatrixXd>> lu(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    if (c > 0) {
      const MatrixXd m = lu[c - 1].solve(upper[c - 1]);
      diag[c] -= lower[c] * m;
      rhs.col(static_cast<Eigen::Index>(c)) -=
          lower[c] * lu[c - 1].solve(rhs.col(static_cast<Eigen::Index>(c - 1)));
    }
    lu[c].compute(diag[c]);
  }
  for (std::size_t c = cells; c-- > 0;) {
    const auto ci = static_cast<Eigen::Index>(c);
    VectorXd y = rhs.col(ci);
    if (c + 1 < cells) y -= upper[c] * rhs.col(ci + 1);
    rhs.col(ci) = lu[c].solve(y);
  }
  return rhs.allFinite();
}

constexpr int kPolishIterations = 2;

MatrixXd u_direction(const MatrixXd& u, const MatrixXd& delta) {
  MatrixXd du(u.rows(), u.cols());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const VectorXd v = u.col(c);
    const VectorXd d = delta.col(c);
    du.col(c) = v.cwiseProduct(d) - v * v.dot(d);
  }
  return du;
}

// Largest step in (0, 1] keeping u - step du at least 1% of the way from
// every face of D, per cell (species 0 included).
double fraction_to_boundary(const MatrixXd& u, const MatrixXd& du) {
  constexpr double keep = 0.99;
  double step = 1.0;
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      if (du(i, c) > 0.0) step = std::min(step, keep * u(i, c) / du(i, c));
    const double solvent = 1.0 - u.col(c).sum();
    const double d_solvent = -du.col(c).sum();
    if (d_solvent > 0.0) step = std::min(step, keep * solvent / d_solvent);
  }
  return step;
}

bool to_entropy_variables(const MatrixXd& u, std::vector<double>& w) {
  const auto n = static_cast<std::size_t>(u.rows());
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    double rho = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (!(u(i, c) > 0.0)) return false;
      rho += u(i, c);
    }
    const double solvent = 1.0 - rho;
    if (!(solvent > 0.0)) return false;
    for (std::size_t i = 0; i < n; ++i)
      w[static_cast<std::size_t>(c) * n + i] = std::log(u(static_cast<Eigen::Index>(i), c)) - std::log(solvent);
  }
  return true;
}

}  // namespace

NewtonOutcome solve_conservative_step(const ConservativeStep& problem, const CoefficientMatrix& k, double dt,
                                      std::span<const double> w_old, std::vector<double>& w,
                                      const NewtonSettings& settings) {
  const std::size_t n = k.species();
  const MatrixXd u_old = fractions(w_old, problem.cells, n);
  Assembler assemble(problem, k, dt, u_old);

  MatrixXd u = fractions(w, problem.cells, n);
  MatrixXd r = assemble.residual(u);
  NewtonOutcome out;
  out.residual = r.cwiseAbs().maxCoeff();
  std::vector<MatrixXd> lower, diag, upper;

  // Once below tol, a few polishing iterations push the residual towards
  // round-off as long as each one at least halves it; mass drift is the sum
  // of cell residuals, so this keeps long runs conservative.
  int polish = 0;
  for (;;) {
    const bool polishing = out.residual <= settings.tol;
    if (polishing && polish++ == kPolishIterations) break;
    if (!polishing && (out.iterations >= settings.max_iter || !std::isfinite(out.residual))) return out;
    ++out.iterations;
    assemble.jacobian(u, lower, diag, upper);
    MatrixXd delta = r;
    if (!solve_block_tridiagonal(lower, diag, upper, delta)) {
      if (polishing) break;
      return out;
    }
    const double required = polishing ? 0.5 * out.residual : out.residual;

    // Two readings of the same Newton direction: linear in w, or linear in u
    // (du = du/dw delta) cut back to stay inside D. The second one handles
    // near-vacuum cells, where du/dw is tiny and the w step enormous.
    const MatrixXd du = u_direction(u, delta);
    const double to_boundary = fraction_to_boundary(u, du);
    bool accepted = false;
    for (double lambda = 1.0; lambda >= 1.0 / 64.0 && !accepted; lambda *= 0.5) {
      for (int path = 0; path < 2 && !accepted; ++path) {
        std::vector<double> trial(w);
        if (path == 0) {
          for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= lambda * delta.data()[i];
        } else {
          const MatrixXd u_new = u - lambda * to_boundary * du;
          if (!to_entropy_variables(u_new, trial)) continue;
        }
        if (!std::all_of(trial.begin(), trial.end(), [](double v) { return std::isfinite(v); })) continue;
        MatrixXd u_trial = fractions(trial, problem.cells, n);
        MatrixXd r_trial = assemble.residual(u_trial);
        const double norm = r_trial.cwiseAbs().maxCoeff();
        if (norm < required) {
          w = std::move(trial);
          u = std::move(u_trial);
          r = std::move(r_trial);
          out.residual = norm;
          accepted = true;
        }
      }
    }
    if (!accepted) {
      if (polishing) break;
      return out;
    }
  }
  out.converged = true;
  return out;
}

}  // namespace crossdiff::detail
