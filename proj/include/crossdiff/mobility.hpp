#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "crossdiff/simplex.hpp"

namespace crossdiff {

/// Mobility matrix A(u) of the reduced n-species system, flux = A(u) grad u.
Eigen::MatrixXd mobility(const Composition& u, const CoefficientMatrix& k);

/// Derivative of A(u) g with respect to u for a fixed vector g:
/// column m holds (dA/du_m) g. A is affine in u, so this does not depend on u.
Eigen::MatrixXd mobility_directional_derivative(const Eigen::VectorXd& g, const CoefficientMatrix& k);

/// diag(1/u_i); needs a strictly interior point.
Eigen::MatrixXd lambda_matrix(const Composition& u);
Eigen::MatrixXd p_matrix(const Composition& u);
Eigen::MatrixXd d_matrix(const Composition& u);
/// A(u) assembled with every coefficient lowered by alpha.
Eigen::MatrixXd a_tilde(const Composition& u, const CoefficientMatrix& k, double alpha);
/// M(u) = A~(u) H(u)^{-1} from its closed-form entries; needs a strictly interior point.
Eigen::MatrixXd m_matrix(const Composition& u, const CoefficientMatrix& k, double alpha);

/// Raised when a coefficient matrix does not satisfy K_ij > 0 for all i != j.
class HypothesisViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Sampled witness of the inequality H(u) A(u) >= alpha Lambda(u) in the
 * quadratic-form sense, with the auxiliary identities used in its proof.
 */
struct StructureCertificate {
  double alpha = 0.0;
  std::vector<double> m;  // growth exponents, all 1/2
  double alpha_star = 0.0;
  std::size_t samples = 0;
  /// Most negative z^T (H A - alpha Lambda) z / |z|^2 seen (eigenvalues of the
  /// symmetric part and random directions).
  double min_quadratic_residual = 0.0;
  /// max |H P - Lambda| entry.
  double max_hp_identity_error = 0.0;
  /// max |A - alpha P - (A~ + alpha D)| entry.
  double max_splitting_error = 0.0;
  /// Smallest eigenvalue of the symmetric part of H D.
  double min_hd_eigenvalue = 0.0;
  /// Smallest eigenvalue of M.
  double min_m_eigenvalue = 0.0;
  /// max |M_ij - M_ji|.
  double max_m_asymmetry = 0.0;
  /// max |M - A~ H^{-1}| entry (closed form against the product).
  double max_m_product_error = 0.0;
  /// min over i of M_ii - sum_{j != i} |M_ij|.
  double min_m_dominance_margin = 0.0;
  /// Sample that produced min_quadratic_residual.
  std::vector<double> worst_point;

  bool passed() const;
};

struct StructureCheckOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  /// Random unit directions per sample in addition to the eigenvalue test.
  std::size_t directions = 8;
  unsigned threads = 1;
};

inline constexpr double kQuadraticTolerance = 1e-10;
inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kDominanceTolerance = 1e-12;

/**
 * Samples compositions in D (10% near a species face, 10% near the solvent
 * face, the rest uniform) and evaluates the structure identities in long
 * double. The result does not depend on the thread count.
 * Throws HypothesisViolation if some K_ij <= 0.
 */
StructureCertificate check_structure(const CoefficientMatrix& k, const StructureCheckOptions& options);

nlohmann::json to_json(const StructureCertificate& cert);

}  // namespace crossdiff
