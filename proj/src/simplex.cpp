#include "crossdiff/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace crossdiff {

Composition Composition::make(std::vector<double> u) {
  double rho = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || u[i] < 0.0) {
      std::ostringstream msg;
      msg << "composition entry u_" << i + 1 << " = " << u[i] << " is not a nonnegative number";
      throw std::invalid_argument(msg.str());
    }
    rho += u[i];
  }
  if (rho > 1.0) {
    std::ostringstream msg;
    msg << "composition has rho = " << rho << " > 1";
    throw std::invalid_argument(msg.str());
  }
  return Composition(std::move(u));
}

double Composition::rho() const {
  double s = 0.0;
  for (double v : u_) s += v;
  return s;
}

bool Composition::is_interior() const {
  for (double v : u_) {
    if (!(v > kInteriorMargin)) return false;
  }
  return rho() < 1.0 - kInteriorMargin;
}

CoefficientMatrix CoefficientMatrix::from_full(const std::vector<std::vector<double>>& k) {
  if (k.size() < 2) throw std::invalid_argument("coefficient matrix needs at least two species");
  const std::size_t m = k.size();
  std::vector<double> flat(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (k[i].size() != m) throw std::invalid_argument("coefficient matrix must be square");
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double v = k[i][j];
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream msg;
        msg << "K_" << i << j << " = " << v << " must be a nonnegative number";
        throw std::invalid_argument(msg.str());
      }
      if (v != k[j][i]) {
        std::ostringstream msg;
        msg << "K is not symmetric: K_" << i << j << " = " << v << " but K_" << j << i << " = "
            << k[j][i];
        throw std::invalid_argument(msg.str());
      }
      flat[i * m + j] = v;
    }
  }
  return CoefficientMatrix(m - 1, std::move(flat));
}

CoefficientMatrix CoefficientMatrix::uniform(std::size_t n, double value) {
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(n + 1, value));
  return from_full(rows);
}

double CoefficientMatrix::alpha() const {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= n_; ++i)
    for (std::size_t j = 0; j <= n_; ++j)
      if (i != j) a = std::min(a, (*this)(i, j));
  return a;
}

CoefficientMatrix CoefficientMatrix::shifted(double shift) const {
  std::vector<double> k = k_;
  for (std::size_t i = 0; i <= n_; ++i)
    for (std::size_t j = 0; j <= n_; ++j)
      if (i != j) k[i * (n_ + 1) + j] -= shift;
  return CoefficientMatrix(n_, std::move(k));
}

std::vector<std::vector<double>> CoefficientMatrix::to_rows() const {
  std::vector<std::vector<double>> rows(n_ + 1, std::vector<double>(n_ + 1));
  for (std::size_t i = 0; i <= n_; ++i)
    for (std::size_t j = 0; j <= n_; ++j) rows[i][j] = (*this)(i, j);
  return rows;
}

ValidationReport validate_initial(const std::vector<std::vector<double>>& cells, std::size_t n) {
  ValidationReport report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& u = cells[c];
    if (u.size() != n) {
      report.violations.push_back({c, "expected " + std::to_string(n) + " entries"});
      continue;
    }
    double rho = 0.0;
    bool bad = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(u[i]) || u[i] < 0.0) {
        report.violations.push_back({c, "u_" + std::to_string(i + 1) + " negative or not finite"});
        bad = true;
        break;
      }
      rho += u[i];
    }
    if (!bad && rho > 1.0) report.violations.push_back({c, "rho exceeds 1"});
  }
  return report;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over a combined state
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Dirichlet(1,...,1) over `parts` entries, scaled to sum to `total`.
std::vector<double> dirichlet(std::size_t parts, double total, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> g(parts);
  double s = 0.0;
  for (auto& v : g) {
    v = expo(rng);
    s += v;
  }
  for (auto& v : g) v = total * v / s;
  return g;
}

double log_uniform(double lo_exp, double hi_exp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(lo_exp, hi_exp);
  return std::pow(10.0, uni(rng));
}

}  // namespace

Composition sample_interior(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_interior needs n >= 1");
  std::mt19937_64 rng(seed);
  for (;;) {
    auto parts = dirichlet(n + 1, 1.0, rng);
    parts.pop_back();
    auto c = Composition::make(std::move(parts));
    if (c.is_interior()) return c;
  }
}

Composition sample_region(std::size_t n, SampleRegion region, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_region needs n >= 1");
  if (region == SampleRegion::bulk) return sample_interior(n, seed);
  std::mt19937_64 rng(seed);
  for (;;) {
    std::vector<double> u(n);
    if (region == SampleRegion::near_species_face) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      const std::size_t i = pick(rng);
      const double small = log_uniform(-6.0, -3.0, rng);
      // remaining n parts: the other n-1 species followed by the solvent
      const auto rest = dirichlet(n, 1.0 - small, rng);
      for (std::size_t j = 0, r = 0; j < n; ++j) u[j] = (j == i) ? small : rest[r++];
    } else {
      const double solvent = log_uniform(-6.0, -3.0, rng);
      u = dirichlet(n, 1.0 - solvent, rng);
    }
    double rho = 0.0;
    for (double v : u) rho += v;
    if (rho > 1.0) continue;
    auto c = Composition::make(std::move(u));
    if (c.is_interior()) return c;
  }
}

}  // namespace crossdiff
