#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "crossdiff/entropy.hpp"
#include "oracles.hpp"

using namespace crossdiff;
using doctest::Approx;

TEST_CASE("entropy values") {
  CHECK(entropy(Composition::make({1.0 / 3, 1.0 / 3})) == Approx(-std::log(3.0)).epsilon(1e-15));
  CHECK(entropy(Composition::make({1.0, 0.0})) == 0.0);
  CHECK(entropy(Composition::make({0.0, 0.0})) == 0.0);
  CHECK(entropy(Composition::make({0.5, 0.25})) == Approx(-1.0397207708399179).epsilon(1e-14));
}

TEST_CASE("entropy gradient and its inverse") {
  auto w = entropy_gradient(Composition::make({1.0 / 3, 1.0 / 3}));
  CHECK(std::abs(w(0)) < 1e-15);
  CHECK(std::abs(w(1)) < 1e-15);

  w = entropy_gradient(Composition::make({0.5, 0.25}));
  CHECK(w(0) == Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(w(1)) < 1e-15);

  CHECK(std::abs(entropy_gradient(Composition::make({0.5}))(0)) < 1e-15);

  for (std::size_t n = 1; n <= 4; ++n) {
    const auto u = entropy_gradient_inverse(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    for (double v : u.values()) CHECK(v == Approx(1.0 / (n + 1)).epsilon(1e-15));
  }

  const Eigen::Vector2d w2(std::log(2.0), 0.0);
  const auto u = entropy_gradient_inverse(Eigen::VectorXd(w2));
  CHECK(u[0] == Approx(0.5).epsilon(1e-15));
  CHECK(u[1] == Approx(0.25).epsilon(1e-15));

  const auto big = entropy_gradient_inverse(Eigen::VectorXd::Constant(1, 50.0));
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == Approx(std::exp(50.0) / (1.0 + std::exp(50.0))));
  CHECK(big.rho() <= 1.0);

  const auto huge = entropy_gradient_inverse(Eigen::VectorXd::Constant(3, 800.0));
  CHECK(huge.rho() <= 1.0);
  CHECK(huge[0] == Approx(1.0 / 3.0));
}

TEST_CASE("boundary input is rejected where the logarithm is singular") {
  CHECK_THROWS_AS(entropy_gradient(Composition::make({0.0, 0.5})), std::domain_error);
  CHECK_THROWS_AS(entropy_gradient(Composition::make({0.5, 0.5})), std::domain_error);
  CHECK_THROWS_AS(entropy_hessian(Composition::make({1.0})), std::domain_error);
  CHECK_THROWS_AS(entropy_gradient_inverse(std::vector<double>{NAN}), std::invalid_argument);
}

TEST_CASE("hessian entries") {
  const auto h = entropy_hessian(Composition::make({1.0 / 3, 1.0 / 3}));
  CHECK(h(0, 0) == Approx(6.0).epsilon(1e-14));
  CHECK(h(1, 1) == Approx(6.0).epsilon(1e-14));
  CHECK(h(0, 1) == Approx(3.0).epsilon(1e-14));
  CHECK(h(1, 0) == h(0, 1));
  CHECK(entropy_hessian(Composition::make({0.5}))(0, 0) == Approx(4.0).epsilon(1e-15));
}

TEST_CASE("round trip u -> w -> u over sampled interior points") {
  for (int s = 0; s < 10000; ++s) {
    const std::size_t n = 1 + s % 4;
    const auto u = sample_interior(n, mix_seed(5, s));
    const auto back = entropy_gradient_inverse(entropy_gradient(u));
    for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(back[i] - u[i]) <= 1e-12);
  }
}

TEST_CASE("round trip w -> u -> w") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int s = 0; s < 10000; ++s) {
    const std::size_t n = 1 + s % 4;
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (auto& v : w) v = std::clamp(gauss(rng), -30.0, 30.0);
    const auto back = entropy_gradient(entropy_gradient_inverse(w));
    REQUIRE((back - w).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("round trip w -> u -> w loses accuracy only through the derived solvent fraction") {
  // For large positive w the solvent fraction 1 - rho is of size e^{-max w}
  // and is recovered by cancellation, so the error scales with e^{max w}.
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> uni(-30.0, 30.0);
  for (int s = 0; s < 10000; ++s) {
    const std::size_t n = 1 + s % 4;
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (auto& v : w) v = uni(rng);
    const double bound = 1e-9 + 1e-14 * std::exp(std::max(0.0, w.maxCoeff()));
    const auto u = entropy_gradient_inverse(w);
    if (!u.is_interior()) {
      // only when some exact fraction lies at or below the interior margin
      long double sum = 1.0L;
      for (double v : w) sum += std::exp(static_cast<long double>(v));
      const long double lse = std::log(sum);
      const long double smallest = std::min<long double>(w.minCoeff(), 0.0L) - lse;
      REQUIRE(smallest < std::log(2e-14L));
      continue;
    }
    const auto back = entropy_gradient(u);
    REQUIRE((back - w).cwiseAbs().maxCoeff() <= bound);
  }
}

namespace {

// Random interior point with every fraction (solvent included) above 0.02,
// and a direction that keeps u +- eps z inside D.
std::pair<Composition, Eigen::VectorXd> interior_point_and_direction(std::size_t n, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const auto u = sample_interior(n, mix_seed(seed, attempt));
    bool ok = u.u0() > 0.02;
    for (double v : u.values()) ok = ok && v > 0.02;
    if (!ok) continue;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (auto& v : z) v = gauss(rng);
    return {u, z.normalized()};
  }
}

Composition shifted(const Composition& u, const Eigen::VectorXd& z, double eps) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += eps * z(static_cast<Eigen::Index>(i));
  return Composition::make(v);
}

}  // namespace

TEST_CASE("gradient matches central differences of h at second order") {
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 4;
    const auto [u, z] = interior_point_and_direction(n, 100 + s);
    const double exact = entropy_gradient(u).dot(z);
    auto h_at = [&, &u = u, &z = z](double eps) {
      const auto p = shifted(u, z, eps);
      return oracle::entropy_direct({p.values().begin(), p.values().end()});
    };
    auto fd_error = [&](double eps) { return std::abs((h_at(eps) - h_at(-eps)) / (2 * eps) - exact); };
    const double e1 = fd_error(2e-3), e2 = fd_error(1e-3);
    double smallest = u.u0();
    for (double v : u.values()) smallest = std::min(smallest, v);
    CHECK(e2 <= 1e-6 * double(n + 1) / (smallest * smallest));
    if (e1 > 1e-9) CHECK(e1 / e2 == Approx(4.0).epsilon(0.25));
  }
}

TEST_CASE("hessian matches central differences of the gradient at second order") {
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 4;
    const auto [u, z] = interior_point_and_direction(n, 900 + s);
    const Eigen::VectorXd exact = entropy_hessian(u) * z;
    auto fd_error = [&, &u = u, &z = z](double eps) {
      const Eigen::VectorXd fd =
          (entropy_gradient(shifted(u, z, eps)) - entropy_gradient(shifted(u, z, -eps))) / (2 * eps);
      return (fd - exact).cwiseAbs().maxCoeff();
    };
    const double e1 = fd_error(2e-3), e2 = fd_error(1e-3);
    double smallest = u.u0();
    for (double v : u.values()) smallest = std::min(smallest, v);
    CHECK(e2 <= 1e-6 * double(n + 1) / (smallest * smallest * smallest));
    if (e1 > 1e-8) CHECK(e1 / e2 == Approx(4.0).epsilon(0.25));
  }
}

TEST_CASE("hessian is symmetric positive definite and inverts to diag(u) - u u^T") {
  for (int s = 0; s < 2000; ++s) {
    const std::size_t n = 1 + s % 4;
    const auto u = sample_region(n, static_cast<SampleRegion>(s % 3), mix_seed(23, s));
    const auto h = entropy_hessian(u);
    REQUIRE((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
    const Eigen::MatrixXd prod = h * entropy_hessian_inverse(u);
    REQUIRE((prod - Eigen::MatrixXd::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("entropy stays within [-ln(n+1), 0] on the closed set") {
  for (int s = 0; s < 10000; ++s) {
    const std::size_t n = 1 + s % 4;
    const auto u = sample_region(n, static_cast<SampleRegion>(s % 3), mix_seed(29, s));
    const double h = entropy(u);
    REQUIRE(h <= 0.0);
    REQUIRE(h >= -std::log(double(n + 1)) - 1e-15);
  }
  // vertices and faces
  CHECK(entropy(Composition::make({0.0, 1.0, 0.0})) == 0.0);
  CHECK(entropy(Composition::make({0.5, 0.5, 0.0})) == Approx(-std::log(2.0)));
}
