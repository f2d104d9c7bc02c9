#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "crossdiff/moving_domain.hpp"

using namespace crossdiff;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

CoefficientMatrix random_k(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.1, 3.0);
  std::vector<std::vector<double>> rows(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j) rows[i][j] = rows[j][i] = uni(rng);
  return CoefficientMatrix::from_full(rows);
}

double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.cells(); ++k)
    for (std::size_t i = 0; i < a.species(); ++i) m = std::max(m, std::abs(a.at(k)[i] - b.at(k)[i]));
  return m;
}

}  // namespace

TEST_CASE("flux schedule validation") {
  CHECK_THROWS_AS(FluxSchedule({0.5}, {{1, 1}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0, 1.0}, {{1, 1}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0, 1.0, 1.0}, {{1, 1}, {1, 1}, {1, 1}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0}, {{1, -1}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0, 1.0}, {{1, 1}, {1, 1, 1}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0, 1.0}, {{1, 1}, {1, 1}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSchedule({0.0}, {{1}}, 1.0), std::invalid_argument);

  const FluxSchedule s({0.0, 1.0}, {{1, 2}, {0, 0}}, 3.0);
  CHECK(s.species() == 1);
  CHECK(s.interval(0.0) == 0);
  CHECK(s.interval(1.0) == 1);  // right-continuous
  CHECK(s.interval(3.0) == 1);
  CHECK(s.total(0.5) == 3.0);
  CHECK(s.next_breakpoint(0.2) == 1.0);
  CHECK(s.next_breakpoint(1.0) == 3.0);
  CHECK_THROWS_AS(s.at(3.5), std::out_of_range);
  CHECK_THROWS_AS(s.at(-0.1), std::out_of_range);
}

TEST_CASE("thickness law") {
  const auto none = FluxSchedule::constant({0, 0, 0}, 5.0);
  for (double t : {0.0, 1.0, 5.0}) CHECK(thickness(none, 2.0, t) == 2.0);

  const auto lin = FluxSchedule::constant({1, 2}, 10.0);
  for (double t : {0.0, 0.25, 1.0, 7.5}) CHECK(thickness(lin, 1.0, t) == 1.0 + 3.0 * t);

  const FluxSchedule stop({0.0, 1.0}, {{1, 2}, {0, 0}}, 3.0);
  CHECK(thickness(stop, 1.0, 2.0) == thickness(stop, 1.0, 1.0));
  CHECK(thickness(stop, 1.0, 1.0) == 4.0);
  CHECK_THROWS_AS(thickness(stop, 1.0, 3.5), std::out_of_range);

  const FluxSchedule many({0.0, 0.3, 0.7, 1.1}, {{0.5, 0.1, 0.0}, {0.0, 0.0, 0.0}, {2.0, 0.0, 1.0}, {0.2, 0.2, 0.2}}, 2.0);
  double last = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double e = thickness(many, 0.5, 0.01 * i);
    CHECK(e >= last);
    last = e;
  }
  const auto dep = many.deposited(2.0);
  CHECK(dep[0] == Approx(0.3 * 0.5 + 0.4 * 2.0 + 0.9 * 0.2));
  CHECK(dep[1] == Approx(0.3 * 0.1 + 0.9 * 0.2));
  CHECK(dep[2] == Approx(0.4 * 1.0 + 0.9 * 0.2));
  CHECK(thickness(many, 0.5, 2.0) == Approx(0.5 + dep[0] + dep[1] + dep[2]));

  const MovingDomain d{lin, 2.0};
  CHECK(d.e(1.0) == 5.0);
  CHECK(d.rate(0.3) == 3.0);
  CHECK(d.physical(0.5, 1.0) == 2.5);
}

TEST_CASE("constant-composition deposition is reproduced exactly") {
  const std::vector<double> c{0.2, 0.35};
  const double c0 = 1.0 - c[0] - c[1];
  const std::vector<double> breaks{0.0, 0.13, 0.4, 0.41, 0.9};
  const std::vector<double> g{1.0, 0.0, 5.0, 0.3, 2.0};
  std::vector<std::vector<double>> values;
  for (double gi : g) values.push_back({c0 * gi, c[0] * gi, c[1] * gi});
  const MovingDomain domain{FluxSchedule(breaks, values, 1.5), 0.7};

  const Grid1D ref(1.0, 40);
  const auto f0 = Field::from_profile(ref, 2, [&](double) { return c; });
  SolverConfig config;
  config.dt = 0.02;
  config.t_end = 1.5;
  const auto traj = run_moving(f0, random_k(2, 3), domain, config);

  for (double b : breaks) CHECK(std::find(traj.times.begin(), traj.times.end(), b) != traj.times.end());
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    CHECK(traj.thickness[s] == domain.e(traj.times[s]));
    for (const auto& u : traj.fields[s].compositions()) {
      REQUIRE(std::abs(u[0] - c[0]) <= 1e-10);
      REQUIRE(std::abs(u[1] - c[1]) <= 1e-10);
    }
  }
  // piecewise-linear e by hand
  double e = 0.7;
  for (std::size_t j = 0; j < breaks.size(); ++j) e += ((j + 1 < breaks.size() ? breaks[j + 1] : 1.5) - breaks[j]) * g[j];
  CHECK(traj.thickness.back() == Approx(e).epsilon(1e-15));
  CHECK(mass_balance(traj, domain).max_defect() <= 1e-10);
}

TEST_CASE("without deposition the moving solver is the fixed solver on (0, e0)") {
  const double e0 = 2.5;
  const auto k = CoefficientMatrix::from_full({{0, 1, 0.3}, {1, 0, 2}, {0.3, 2, 0}});
  auto profile = [](double x) { return std::vector<double>{0.3 + 0.2 * std::cos(pi * x), 0.2 + 0.1 * std::sin(3 * x)}; };
  const Grid1D ref(1.0, 50), phys(e0, 50);
  const auto fr = Field::from_profile(ref, 2, [&](double xi) { return profile(xi * e0); });
  const auto fp = Field::from_profile(phys, 2, profile);
  SolverConfig config;
  config.dt = 5e-3;
  config.t_end = 0.5;
  const MovingDomain domain{FluxSchedule::constant({0, 0, 0}, 1.0), e0};
  const auto moving = run_moving(fr, k, domain, config);
  const auto fixed = run(fp, k, config);
  REQUIRE(moving.fields.size() == fixed.fields.size());
  for (std::size_t s = 0; s < moving.fields.size(); ++s) {
    REQUIRE(max_diff(moving.fields[s], fixed.fields[s]) <= 1e-12);
    CHECK(moving.thickness[s] == e0);
  }
  CHECK(mass_balance(moving, domain).max_defect() <= 1e-10);

  const auto one = step_moving(fr, k, domain, 0.0, 0.01, config);
  const auto two = step(fp, k, 0.01, config);
  CHECK(max_diff(one.field, two.field) <= 1e-12);
}

TEST_CASE("mass law for random schedules") {
  for (int r = 0; r < 4; ++r) {
    const std::size_t n = 1 + r % 3;
    std::mt19937_64 rng(40 + r);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> breaks{0.0};
    for (int j = 0; j < 3; ++j) breaks.push_back(breaks.back() + 0.05 + 0.2 * uni(rng));
    std::vector<std::vector<double>> values(breaks.size(), std::vector<double>(n + 1));
    for (auto& v : values)
      for (auto& phi : v) phi = uni(rng) < 0.2 ? 0.0 : 2.0 * uni(rng);
    const MovingDomain domain{FluxSchedule(breaks, values, 1.0), 0.5 + uni(rng)};
    const Grid1D ref(1.0, 40);
    const auto f0 = Field::from_profile(ref, n, [&](double xi) {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = (0.5 + 0.4 * std::cos(pi * (i + 1) * xi)) / double(n + 1);
      return u;
    });
    SolverConfig config;
    config.dt = 0.01;
    config.t_end = 1.0;
    const auto traj = run_moving(f0, random_k(n, 50 + r), domain, config);
    const auto report = mass_balance(traj, domain);
    CHECK(report.species.size() == n + 1);
    CHECK(report.max_defect() <= 1e-8 * (1.0 + report.total_deposited));
    for (std::size_t s = 1; s < traj.thickness.size(); ++s) CHECK(traj.thickness[s] >= traj.thickness[s - 1]);
    for (const auto& f : traj.fields)
      for (const auto& u : f.compositions()) {
        for (double v : u.values()) REQUIRE(v > 0.0);
        REQUIRE(u.u0() > 0.0);
      }
  }
}

TEST_CASE("pure deposition of species 1 on a solvent film") {
  const auto k = CoefficientMatrix::from_full({{0, 0.5}, {0.5, 0}});
  const MovingDomain domain{FluxSchedule::constant({0.0, 1.0}, 1.0), 1.0};
  SolverConfig config;
  config.dt = 0.01;
  config.t_end = 0.5;
  auto solve = [&](std::size_t cells) {
    const auto f0 = Field::from_profile(Grid1D(1.0, cells), 1, [](double) { return std::vector<double>{0.0}; });
    return run_moving(f0, k, domain, config);
  };
  const auto reference = solve(2000);
  double last_edge = 0.0;
  for (const auto& f : reference.fields) {
    for (std::size_t c = 1; c < f.cells(); ++c) REQUIRE(f.at(c)[0] >= f.at(c - 1)[0]);
    const double edge = f.at(f.cells() - 1)[0];
    CHECK(edge >= last_edge);
    last_edge = edge;
  }
  CHECK(last_edge > 0.5);
  CHECK(last_edge < 1.0);

  // coarse runs against the fine one, compared on cell averages of the fine grid
  auto error = [&](std::size_t cells) {
    const auto coarse = solve(cells);
    const auto& fine = reference.fields.back();
    const std::size_t per = 2000 / cells;
    double err = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      double mean = 0.0;
      for (std::size_t j = 0; j < per; ++j) mean += fine.at(c * per + j)[0];
      err = std::max(err, std::abs(coarse.fields.back().at(c)[0] - mean / double(per)));
    }
    return err;
  };
  const double e50 = error(50), e100 = error(100), e200 = error(200);
  CHECK(e100 < e50);
  CHECK(e200 < e100);
}

TEST_CASE("step preconditions") {
  const MovingDomain domain{FluxSchedule({0.0, 0.5}, {{1.0, 1.0}, {0.0, 0.0}}, 1.0), 1.0};
  const auto k = CoefficientMatrix::uniform(1, 1.0);
  const auto f = Field::from_profile(Grid1D(1.0, 10), 1, [](double) { return std::vector<double>{0.3}; });
  CHECK_THROWS_AS(step_moving(f, k, domain, 0.4, 0.2, {}), std::invalid_argument);
  CHECK_NOTHROW(step_moving(f, k, domain, 0.4, 0.1, {}));
  const auto g = Field::from_profile(Grid1D(2.0, 10), 1, [](double) { return std::vector<double>{0.3}; });
  CHECK_THROWS_AS(step_moving(g, k, domain, 0.0, 0.1, {}), std::invalid_argument);
  SolverConfig config;
  config.t_end = 2.0;
  CHECK_THROWS_AS(run_moving(f, k, domain, config), std::invalid_argument);
}

TEST_CASE("mass balance report") {
  const MovingDomain domain{FluxSchedule::constant({0.2, 0.1}, 1.0), 1.0};
  const auto f = Field::from_profile(Grid1D(1.0, 20), 1, [](double x) { return std::vector<double>{0.2 + 0.1 * x}; });
  SolverConfig config;
  config.dt = 0.1;
  config.t_end = 1.0;
  const auto traj = run_moving(f, CoefficientMatrix::uniform(1, 1.0), domain, config);
  const auto report = mass_balance(traj, domain);
  CHECK(report.times == traj.times);
  CHECK(report.total_deposited == Approx(0.3));
  CHECK(report.species[1].defects.size() == traj.times.size());
  const auto j = to_json(report);
  CHECK(j["species"].size() == 2);
  CHECK(j["species"][0].contains("max_defect"));
  CHECK(j["species"][0].contains("time_of_max"));
}
