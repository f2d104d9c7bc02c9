#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace crossdiff {

/// Threshold below which a volume fraction counts as touching the boundary of D.
inline constexpr double kInteriorMargin = 1e-14;

/**
 * A point u = (u_1, ..., u_n) of the closed set
 * D = { u_i >= 0, rho = sum_i u_i <= 1 }.
 *
 * The solvent (vacancy) fraction u_0 = 1 - rho is always derived and never
 * stored, so u_0 + rho == 1 holds in IEEE arithmetic for every instance.
 */
class Composition {
 public:
  /// Throws std::invalid_argument unless every entry is finite, u_i >= 0 and rho <= 1.
  static Composition make(std::vector<double> u);

  std::size_t size() const { return u_.size(); }
  double operator[](std::size_t i) const { return u_[i]; }
  std::span<const double> values() const { return u_; }
  Eigen::Map<const Eigen::VectorXd> vector() const {
    return {u_.data(), static_cast<Eigen::Index>(u_.size())};
  }

  /// Sum of the n stored fractions, accumulated in index order.
  double rho() const;
  double u0() const { return 1.0 - rho(); }

  /// u_i > 1e-14 for all i and rho < 1 - 1e-14.
  bool is_interior() const;

  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  explicit Composition(std::vector<double> u) : u_(std::move(u)) {}
  std::vector<double> u_;
};

/**
 * Symmetric cross-diffusion coefficients K_ij, 0 <= i, j <= n, for the
 * (n+1)-species system. Diagonal entries are unused and stored as zero.
 */
class CoefficientMatrix {
 public:
  /// Full (n+1)x(n+1) matrix; the diagonal is ignored. Rejects asymmetric,
  /// negative or non-finite off-diagonal entries.
  static CoefficientMatrix from_full(const std::vector<std::vector<double>>& k);
  /// Every off-diagonal coefficient equal to `value`.
  static CoefficientMatrix uniform(std::size_t n, double value);

  /// Number of species excluding species 0.
  std::size_t species() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return k_[i * (n_ + 1) + j]; }

  /// min over 0 <= i != j <= n of K_ij.
  double alpha() const;
  bool strictly_positive() const { return alpha() > 0.0; }

  /// Same structure with every off-diagonal coefficient lowered by `shift`
  /// (entries may become negative; no validation).
  CoefficientMatrix shifted(double shift) const;

  std::vector<std::vector<double>> to_rows() const;

 private:
  CoefficientMatrix(std::size_t n, std::vector<double> k) : n_(n), k_(std::move(k)) {}
  std::size_t n_ = 0;
  std::vector<double> k_;
};

struct Violation {
  std::size_t cell = 0;
  std::string reason;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks u_i >= 0 and rho <= 1 (no tolerance) for every cell of a raw
/// per-cell profile with n entries per cell.
ValidationReport validate_initial(const std::vector<std::vector<double>>& cells, std::size_t n);

/// Uniform draw from the open simplex: Dirichlet(1, ..., 1) over n+1 parts,
/// keeping the first n. Deterministic per seed; always strictly interior.
Composition sample_interior(std::size_t n, std::uint64_t seed);

/// Which region a structure-check sample is drawn from.
enum class SampleRegion { bulk, near_species_face, near_solvent_face };

/**
 * Interior sample concentrated near part of the boundary of D.
 * near_species_face: one u_i log-uniform in [1e-6, 1e-3);
 * near_solvent_face: 1 - rho log-uniform in [1e-6, 1e-3).
 */
Composition sample_region(std::size_t n, SampleRegion region, std::uint64_t seed);

/// Stateless 64-bit mixing used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace crossdiff
