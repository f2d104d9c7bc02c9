#include "crossdiff/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "crossdiff/detail/structure_terms.hpp"

namespace crossdiff {

namespace {

void require_dimension(const Composition& u, const CoefficientMatrix& k) {
  if (u.size() != k.species()) {
    std::ostringstream msg;
    msg << "composition has " << u.size() << " entries but K describes " << k.species() << " species";
    throw std::invalid_argument(msg.str());
  }
}

void require_interior(const Composition& u, const char* what) {
  if (!u.is_interior())
    throw std::domain_error(std::string(what) + " needs a strictly interior composition");
}

}  // namespace

Eigen::MatrixXd mobility(const Composition& u, const CoefficientMatrix& k) {
  require_dimension(u, k);
  return detail::mobility<double>(u.values(), k);
}

Eigen::MatrixXd mobility_directional_derivative(const Eigen::VectorXd& g, const CoefficientMatrix& k) {
  const auto n = static_cast<Eigen::Index>(k.species());
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ki0 = k(i + 1, 0);
    double diag = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (m == i) continue;
      const double c = k(i + 1, m + 1) - ki0;
      b(i, m) = c * g(i);
      diag -= c * g(m);
    }
    b(i, i) = diag;
  }
  return b;
}

Eigen::MatrixXd lambda_matrix(const Composition& u) {
  require_interior(u, "lambda_matrix");
  return detail::lambda<double>(u.values());
}

Eigen::MatrixXd p_matrix(const Composition& u) { return detail::p_matrix<double>(u.values()); }

Eigen::MatrixXd d_matrix(const Composition& u) { return detail::d_matrix<double>(u.values()); }

Eigen::MatrixXd a_tilde(const Composition& u, const CoefficientMatrix& k, double alpha) {
  require_dimension(u, k);
  return detail::mobility<double>(u.values(), k, alpha);
}

Eigen::MatrixXd m_matrix(const Composition& u, const CoefficientMatrix& k, double alpha) {
  require_dimension(u, k);
  require_interior(u, "m_matrix");
  return detail::m_matrix<double>(u.values(), k, alpha);
}

bool StructureCertificate::passed() const {
  return alpha > 0.0 && min_quadratic_residual >= -kQuadraticTolerance &&
         max_hp_identity_error <= kIdentityTolerance && max_splitting_error <= kIdentityTolerance &&
         min_hd_eigenvalue >= -kQuadraticTolerance && min_m_eigenvalue >= -kQuadraticTolerance &&
         max_m_asymmetry == 0.0 && max_m_product_error <= kIdentityTolerance &&
         min_m_dominance_margin >= -kDominanceTolerance;
}

namespace {

using Real = long double;
using MatR = detail::Mat<Real>;
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct Partial {
  double min_residual = std::numeric_limits<double>::infinity();
  double hp_error = 0.0;
  double splitting_error = 0.0;
  double min_hd = std::numeric_limits<double>::infinity();
  double min_m = std::numeric_limits<double>::infinity();
  double m_asym = 0.0;
  double m_product = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> worst;

  void merge(const Partial& o) {
    if (o.min_residual < min_residual) {
      min_residual = o.min_residual;
      worst = o.worst;
    }
    hp_error = std::max(hp_error, o.hp_error);
    splitting_error = std::max(splitting_error, o.splitting_error);
    min_hd = std::min(min_hd, o.min_hd);
    min_m = std::min(min_m, o.min_m);
    m_asym = std::max(m_asym, o.m_asym);
    m_product = std::max(m_product, o.m_product);
    min_margin = std::min(min_margin, o.min_margin);
  }
};

Real min_symmetric_eigenvalue(const MatR& a) {
  const MatR s = (a + a.transpose()) / Real(2);
  Eigen::SelfAdjointEigenSolver<MatR> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SampleRegion region_for(std::size_t index) {
  switch (index % 10) {
    case 0: return SampleRegion::near_species_face;
    case 1: return SampleRegion::near_solvent_face;
    default: return SampleRegion::bulk;
  }
}

Partial check_range(const CoefficientMatrix& k, const StructureCheckOptions& opt, std::size_t begin,
                    std::size_t end) {
  const std::size_t n = k.species();
  const Real alpha = k.alpha();
  Partial part;
  std::vector<Real> u(n);
  for (std::size_t s = begin; s < end; ++s) {
    const auto c = sample_region(n, region_for(s), mix_seed(opt.seed, s));
    for (std::size_t i = 0; i < n; ++i) u[i] = c[i];
    const std::span<const Real> us(u);

    const MatR h = detail::hessian<Real>(us);
    const MatR a = detail::mobility<Real>(us, k);
    const MatR lam = detail::lambda<Real>(us);
    const MatR p = detail::p_matrix<Real>(us);
    const MatR d = detail::d_matrix<Real>(us);
    const MatR at = detail::mobility<Real>(us, k, alpha);
    const MatR m = detail::m_matrix<Real>(us, k, alpha);
    const MatR hinv = detail::hessian_inverse<Real>(us);

    const MatR r = h * a - alpha * lam;
    Real residual = min_symmetric_eigenvalue(r);
    std::mt19937_64 rng(mix_seed(opt.seed ^ 0x5bd1e995ULL, s));
    std::normal_distribution<double> gauss;
    for (std::size_t q = 0; q < opt.directions; ++q) {
      VecR z(static_cast<Eigen::Index>(n));
      for (auto& zi : z) zi = gauss(rng);
      residual = std::min(residual, Real(z.dot(r * z) / z.squaredNorm()));
    }
    if (double(residual) < part.min_residual) {
      part.min_residual = double(residual);
      part.worst.assign(c.values().begin(), c.values().end());
    }

    part.hp_error = std::max(part.hp_error, double((h * p - lam).cwiseAbs().maxCoeff()));
    part.splitting_error =
        std::max(part.splitting_error, double((a - alpha * p - (at + alpha * d)).cwiseAbs().maxCoeff()));
    part.min_hd = std::min(part.min_hd, double(min_symmetric_eigenvalue(h * d)));
    part.m_asym = std::max(part.m_asym, double((m - m.transpose()).cwiseAbs().maxCoeff()));
    part.m_product = std::max(part.m_product, double((m - at * hinv).cwiseAbs().maxCoeff()));
    part.min_m = std::min(part.min_m, double(min_symmetric_eigenvalue(m)));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Real margin = m(i, i);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (j != i) margin -= std::abs(m(i, j));
      part.min_margin = std::min(part.min_margin, double(margin));
    }
  }
  return part;
}

}  // namespace

StructureCertificate check_structure(const CoefficientMatrix& k, const StructureCheckOptions& options) {
  if (!k.strictly_positive())
    throw HypothesisViolation("structure check needs K_ij > 0 for all i != j (min is " +
                              std::to_string(k.alpha()) + ")");
  if (options.samples == 0) throw std::invalid_argument("structure check needs at least one sample");

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, options.samples));
  std::vector<Partial> parts(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t begin = options.samples * t / workers;
      const std::size_t end = options.samples * (t + 1) / workers;
      pool.emplace_back([&, t, begin, end] { parts[t] = check_range(k, options, begin, end); });
    }
  }
  Partial total;
  for (const auto& p : parts) total.merge(p);

  StructureCertificate cert;
  cert.alpha = k.alpha();
  cert.m.assign(k.species(), 0.5);
  cert.alpha_star = std::sqrt(cert.alpha);
  cert.samples = options.samples;
  cert.min_quadratic_residual = total.min_residual;
  cert.max_hp_identity_error = total.hp_error;
  cert.max_splitting_error = total.splitting_error;
  cert.min_hd_eigenvalue = total.min_hd;
  cert.min_m_eigenvalue = total.min_m;
  cert.max_m_asymmetry = total.m_asym;
  cert.max_m_product_error = total.m_product;
  cert.min_m_dominance_margin = total.min_margin;
  cert.worst_point = total.worst;
  return cert;
}

nlohmann::json to_json(const StructureCertificate& cert) {
  return {
      {"passed", cert.passed()},
      {"alpha", cert.alpha},
      {"m", cert.m},
      {"alpha_star", cert.alpha_star},
      {"samples", cert.samples},
      {"min_quadratic_residual", cert.min_quadratic_residual},
      {"max_hp_identity_error", cert.max_hp_identity_error},
      {"max_splitting_error", cert.max_splitting_error},
      {"min_hd_eigenvalue", cert.min_hd_eigenvalue},
      {"min_m_eigenvalue", cert.min_m_eigenvalue},
      {"max_m_asymmetry", cert.max_m_asymmetry},
      {"max_m_product_error", cert.max_m_product_error},
      {"min_m_dominance_margin", cert.min_m_dominance_margin},
      {"worst_point", cert.worst_point},
  };
}

}  // namespace crossdiff
