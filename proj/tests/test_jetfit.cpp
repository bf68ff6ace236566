#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "fbjet/jetfit.hpp"

using namespace fbjet;

namespace {

std::shared_ptr<const UpstreamProfile> uniform() {
  return std::make_shared<const UpstreamProfile>(UpstreamProfile::constant(1.0, 1.0));
}

SolveOptions coarse_options() {
  SolveOptions o;
  o.levels = 2;
  return o;
}

}  // namespace

TEST_CASE("extrapolate_detachment recovers the intercept of a line") {
  FreeBoundaryCurve c;
  for (int n = -3; n <= 10; ++n) {
    c.x.push_back(0.1 * n);
    c.k.push_back(n <= 0 ? 5.0 : 1.0 + 0.2 * 0.1 * n);
    c.truncated.push_back(n == 1);
    c.last_wet.push_back(10);
  }
  CHECK(extrapolate_detachment(c, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isnan(extrapolate_detachment(FreeBoundaryCurve{}, 4)));
}

TEST_CASE("discrete strip without vorticity matches the brute-force lattice optimum") {
  // Irrotational column: psi is linear on the wet rows, so the energy of m wet
  // cells is Q^2 / (m h) + h lambda^2 (m - 1).
  const double q = 1.0, h = 1.0 / 32;
  VorticityTables zero = VorticityTables::zero(q);
  for (double lambda : {1.0, 1.13, 1.5, 2.2, 3.7}) {
    const int rows = 64;
    int best = 1;
    double best_e = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= rows; ++m) {
      const double e = q * q / (m * h) + h * lambda * lambda * (m - 1);
      if (e < best_e) best_e = e, best = m;
    }
    const auto strip = discrete_strip_stream(zero, lambda, h, rows);
    REQUIRE(strip.size() == static_cast<std::size_t>(rows + 1));
    for (int j = 0; j <= rows; ++j)
      CHECK(strip[j] == doctest::Approx(std::min(q * j / best, q)).epsilon(1e-12));
    // The continuous height Q / lambda is within one cell of the lattice one.
    CHECK(std::abs(best * h - q / lambda) <= h);
  }
  CHECK_THROWS_AS(discrete_strip_stream(zero, 1.0, 0.0, 8), InvalidInput);
  CHECK_THROWS_AS(discrete_strip_stream(zero, 1.0, h, 0), InvalidInput);
}

TEST_CASE("discrete strip with shear solves the tridiagonal system") {
  auto profile = std::make_shared<const UpstreamProfile>(UpstreamProfile::quadratic_shear(1.0, 1.0, 1.0));
  VorticityModel model(profile);
  VorticityTables tables(model);
  const double lambda = 2.5, h = 1.0 / 64, q = model.flux();
  const auto strip = discrete_strip_stream(tables, lambda, h, 96);
  DownstreamState ds(profile, lambda);
  int top = 0;
  while (strip[top + 1] < q) ++top;
  for (int j = 1; j <= top; ++j) {
    const double r = strip[j - 1] - 2 * strip[j] + strip[j + 1] + h * h * tables.f(strip[j]);
    CHECK(std::abs(r) <= 1e-12);
    CHECK(std::abs(strip[j] - std::min(ds.stream(j * h), q)) <= 2 * lambda * h);
  }
  CHECK(std::abs((top + 1) * h - ds.height()) <= 2 * h);
}

TEST_CASE("straight nozzle at lambda = lambda0 detaches at the lip") {
  JetCase jet(NozzleGeometry::straight(1.0), uniform(), 3.0);
  CHECK(jet.lambda0() == doctest::Approx(1.0));
  const double h = 1.0 / 16;
  JetState s = detachment_height(jet, 1.0, h, SolverConfig{}, coarse_options());
  CHECK(s.report.converged);
  CHECK(std::abs(s.detachment - 1.0) <= h);
  for (std::size_t n = 0; n < s.curve.size(); ++n)
    if (s.curve.x[n] > 0.0) CHECK(std::abs(s.curve.k[n] - 1.0) <= h);

  SolutionBounds b = solution_bounds(s, jet);
  CHECK(b.curve_excess <= 0.0);
  CHECK(b.strip_excess <= 1e-6);
  CHECK(b.positivity > 0.0);

  FlowFields flow = velocity_pressure_fields(s, jet);
  CHECK(flow.min_u == doctest::Approx(1.0).epsilon(0.05));
  CHECK(flow.interface_pressure <= 0.1);

  AsymptoticsReport a = asymptotics_report(s, jet);
  CHECK(a.upstream <= 1e-3);
  CHECK(a.height <= 2 * h);
  CHECK_THROWS_AS(asymptotics_report(s, jet, -10.0, 1.0), DomainError);

  SmoothFit sf = smooth_fit_check(s.curve, jet.geometry(), 4);
  CHECK_FALSE(sf.skipped);
  CHECK(std::abs(sf.gap) <= 0.05);

  // A faster jet is thinner and leaves the lip below a.
  JetState fast = detachment_height(jet, 1.5, h, SolverConfig{}, coarse_options(), &s);
  CHECK(fast.detachment < 1.0 - h);

  CHECK_THROWS_AS(detachment_height(jet, 0.9, h, SolverConfig{}, coarse_options()), InvalidInput);
}

TEST_CASE("fit and continuation on a coarse straight nozzle") {
  FitConfig fc;
  fc.grid_h = 1.0 / 16;
  fc.solve = coarse_options();
  fc.tol_lambda = 1e-3;
  fc.L_schedule = {3.0, 4.0};
  JetCase jet(NozzleGeometry::straight(1.0), uniform(), 3.0);
  FitOutcome fit = fit_lambda(jet, fc, SolverConfig{});
  CHECK(fit.lambda == doctest::Approx(1.0).epsilon(0.02));
  CHECK(fit.detach_ok);
  CHECK(fit.monotone);
  CHECK(!fit.trace.empty());

  FitResult cont = continuation_in_L(NozzleGeometry::straight(1.0), uniform(), fc, SolverConfig{});
  REQUIRE(cont.entries.size() == 2);
  for (const auto& e : cont.entries) CHECK(e.ok);
  CHECK(cont.spread <= 1e-2);
  CHECK_FALSE(cont.unstable);

  FitConfig bad = fc;
  bad.tol_lambda = 0.0;
  CHECK_THROWS_AS(fit_lambda(jet, bad, SolverConfig{}), InvalidInput);
}

TEST_CASE("uniqueness probe at fixed lambda") {
  JetCase jet(NozzleGeometry::straight(1.0), uniform(), 3.0);
  UniquenessResult u = uniqueness_probe(jet, 1.2, 1.0 / 16, SolverConfig{}, coarse_options());
  CHECK(u.energies.size() == 4);
  CHECK(u.pass);
  CHECK(u.gap <= u.tolerance);
  const double el = *std::min_element(u.energies.begin(), u.energies.end());
  const double eh = *std::max_element(u.energies.begin(), u.energies.end());
  CHECK(eh - el <= 1e-8 * std::max(1.0, std::abs(el)));
}

TEST_CASE("mismatched nozzle and profile heights are rejected") {
  auto tall = std::make_shared<const UpstreamProfile>(UpstreamProfile::constant(2.0, 1.0));
  CHECK_THROWS_AS(JetCase(NozzleGeometry::straight(1.0), tall, 3.0), InvalidInput);
}
