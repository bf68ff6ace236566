#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "fbjet/solver.hpp"

using namespace fbjet;

namespace {

std::shared_ptr<const UpstreamProfile> shear() {
  return std::make_shared<const UpstreamProfile>(UpstreamProfile::quadratic_shear(1.0, 1.0, 1.0));
}

struct Strip {
  std::shared_ptr<const UpstreamProfile> profile = shear();
  VorticityModel model{profile};
  VorticityTables tables{model};
  double lambda = 2.5;
  DownstreamState ds{profile, lambda};
  Grid grid;
  Problem problem;

  explicit Strip(double h) {
    const double q = profile->flux();
    grid = rectangle_grid(1.0, 1.0, h, q, [&](double y) { return std::min(ds.stream(y), q); });
    problem = {&grid, &tables, lambda};
  }
  StreamField start() const {
    return initial_field(grid, [&](double y) { return ds.stream(y); });
  }
};

}  // namespace

TEST_CASE("node_update is the exact minimizer of the local energy") {
  Strip s(1.0 / 8);
  SolverConfig cfg;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, s.grid.q);
  StreamField f = s.start();
  for (std::uint32_t k : s.grid.lex) f.psi[k] = u(rng);
  f.refresh_wet();
  for (std::uint32_t k : s.grid.lex) {
    NodeUpdate up = node_update(s.problem, cfg, f, k);
    CHECK(up.wet == (up.value < s.grid.q));
    const double best = local_energy(s.problem, cfg, f, k, up.value);
    for (int n = 0; n <= 400; ++n) {
      const double t = s.grid.q * n / 400;
      CHECK(best <= local_energy(s.problem, cfg, f, k, t) + 1e-12);
    }
  }
  CHECK_THROWS_AS(node_update(s.problem, cfg, f, 0), InvalidInput);
}

TEST_CASE("linear strip: the discrete minimizer is min(lambda y, Q)") {
  // With Q / (lambda h) an integer the lattice optimum puts the first dry
  // row exactly at h_lambda, so the exact solution is recovered.
  const double h = 1.0 / 8, q = 1.0;
  VorticityTables zero = VorticityTables::zero(q);
  Grid g = rectangle_grid(2.0, 2.0, h, q, [](double y) { return std::min(y, 1.0); });
  Problem p{&g, &zero, 1.0};
  SolveReport r;
  StreamField f = minimize(p, SolverConfig{}, dry_field(g), &r);
  CHECK(r.converged);
  for (std::uint32_t k : g.lex)
    CHECK(std::abs(f.psi[k] - std::min(g.y(g.row(k)), 1.0)) <= 1e-9);
  CHECK(pde_residual(p, f) <= 1e-8);
}

TEST_CASE("residual of the exact linear field is zero") {
  const double q = 1.0;
  VorticityTables zero = VorticityTables::zero(q);
  Grid g = rectangle_grid(1.0, 1.0, 1.0 / 16, q, [](double y) { return 0.5 * y; });
  Problem p{&g, &zero, 0.5};
  StreamField f = initial_field(g, [](double y) { return 0.5 * y; });
  CHECK(pde_residual(p, f) <= 1e-12);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.9);
  for (std::uint32_t k : g.lex) f.psi[k] = u(rng);
  CHECK(pde_residual(p, f) > 0.0);
}

TEST_CASE("the shear stream function is a discrete solution") {
  // y + y^3/3 solves psi'' = -f0(psi) and, being cubic, is reproduced exactly
  // by the five-point stencil; only table and rounding error remain.
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    Strip s(h);
    StreamField f = dry_field(s.grid);
    for (std::size_t k = 0; k < f.psi.size(); ++k) {
      const double y = s.grid.y(s.grid.row(k));
      f.psi[k] = y + y * y * y / 3;
    }
    f.refresh_wet();
    CHECK(pde_residual(s.problem, f) <= 1e-9);
    f.psi[s.grid.index(5, 5)] += 1e-3;
    CHECK(pde_residual(s.problem, f) >= 1e-3 / (h * h));
  }
}

TEST_CASE("invariants of a converged free-boundary field") {
  Strip s(1.0 / 16);
  SolverConfig cfg;
  SolveReport r;
  StreamField f = minimize(s.problem, cfg, s.start(), &r);
  const double tol = 1e-8 * s.grid.q, h = s.grid.h;
  CHECK(r.converged);
  CHECK(bound_violation(f) <= 0.0);
  CHECK(monotone_y_violation(f, tol) <= 0.0);
  CHECK(energy_trace_violation(r.energy_trace) <= 0.0);
  CHECK(supersolution_violation(s.problem, f, 10 * tol / (h * h)) <= 0.0);
  CHECK(r.energy_trace.back() == doctest::Approx(energy(s.problem, f)).epsilon(1e-12));

  SUBCASE("sweep orders agree") {
    SolverConfig rb = cfg;
    rb.order = SweepOrder::RedBlack;
    StreamField g = minimize(s.problem, rb, s.start());
    CHECK(max_difference(f, g) <= 10 * tol);
  }
  SUBCASE("dry start reaches the same minimizer") {
    StreamField g = minimize(s.problem, cfg, dry_field(s.grid));
    CHECK(max_difference(f, g) <= 10 * tol);
  }
  SUBCASE("re-runs are bit-identical") {
    SolveReport r2;
    StreamField g = minimize(s.problem, cfg, s.start(), &r2);
    CHECK(g.psi == f.psi);
    CHECK(r2.energy_trace == r.energy_trace);
  }
}

TEST_CASE("penalized mode keeps the bounds") {
  Strip s(1.0 / 16);
  SolverConfig cfg;
  cfg.mode = UpdateMode::Penalized;
  cfg.epsilon = 1e-3;
  SolveReport r;
  StreamField f = minimize(s.problem, cfg, s.start(), &r);
  CHECK(bound_violation(f) <= 0.0);
  CHECK(energy_trace_violation(r.energy_trace) <= 0.0);
}

TEST_CASE("prolongation reproduces bilinear data") {
  const double q = 10.0;
  Grid coarse = rectangle_grid(1.0, 1.0, 0.125, q, [](double y) { return 1.0 + y; });
  Grid fine = rectangle_grid(1.0, 1.0, 0.0625, q, [](double y) { return 1.0 + y; });
  StreamField c = dry_field(coarse);
  for (std::uint32_t k : coarse.lex) c.psi[k] = 1.0 + coarse.y(coarse.row(k)) + 2.0 * coarse.x(coarse.col(k));
  StreamField f = prolongate(c, fine);
  for (std::uint32_t k : fine.lex) {
    const int i = fine.col(k), j = fine.row(k);
    if (i < 2 || j < 2 || i > fine.nx - 2 || j > fine.ny - 2) continue;
    CHECK(f.psi[k] == doctest::Approx(1.0 + fine.y(j) + 2.0 * fine.x(i)).epsilon(1e-12));
  }
}

TEST_CASE("solver configuration validation") {
  SolverConfig bad;
  bad.tol_field = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  SolverConfig pen;
  pen.mode = UpdateMode::Penalized;
  CHECK_THROWS_AS(pen.validate(), ConfigError);
  SolverConfig w;
  w.omega = 2.5;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  CHECK_NOTHROW(SolverConfig{}.validate());
}
