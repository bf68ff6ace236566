#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fbjet/freeboundary.hpp"

using namespace fbjet;

namespace {

// psi = min(lambda y, Q) on [0, 2] x [0, 1]: a flat free boundary at
// y = Q / lambda = 0.5, which lies on a grid row.
struct HalfPlane {
  double h = 1.0 / 32, q = 0.5, lambda = 1.0;
  VorticityTables zero = VorticityTables::zero(q);
  Grid grid;
  StreamField field;

  HalfPlane() {
    grid = rectangle_grid(2.0, 1.0, h, q, [this](double y) { return std::min(lambda * y, q); });
    field = dry_field(grid);
    for (std::size_t k = 0; k < field.psi.size(); ++k)
      field.psi[k] = std::min(lambda * grid.y(grid.row(k)), q);
    field.refresh_wet();
  }
};

}  // namespace

TEST_CASE("curve and gradient of the exact half-plane field") {
  HalfPlane s;
  FreeBoundaryCurve c = extract_curve(s.field, s.lambda);
  CHECK(c.size() == static_cast<std::size_t>(s.grid.nx - 1));
  for (std::size_t n = 0; n < c.size(); ++n) {
    CHECK(c.k[n] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(c.truncated[n]);
  }
  GradientSamples g = boundary_gradient(s.field, c);
  CHECK(!g.value.empty());
  for (double v : g.value) CHECK(v == doctest::Approx(s.lambda).epsilon(1e-12));
  CHECK(lipschitz_constant(c, s.h, 0.25, 1.75) <= 1e-9);
  CHECK(bernoulli_median(g, s.lambda, 0.25, 1.75) <= 1e-12);
  CHECK(std::isnan(bernoulli_median(g, s.lambda, 5.0, 6.0)));
  auto nu = curve_normal(c, c.size() / 2);
  CHECK(nu[0] == doctest::Approx(0.0));
  CHECK(nu[1] == doctest::Approx(1.0));
  for (const auto& p : interface_points(s.field, s.lambda)) {
    CHECK(p[1] >= 0.5 - s.h - 1e-12);
    CHECK(p[1] <= 0.5 + 1e-12);
  }
  std::ostringstream out;
  write_curve(out, c);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') >= static_cast<long>(c.size()));
}

TEST_CASE("extraction rejects a column with two wet blocks") {
  HalfPlane s;
  const int column = 20;
  s.field.psi[s.grid.index(column, 5)] = s.q;
  s.field.refresh_wet();
  try {
    (void)extract_curve(s.field, s.lambda);
    FAIL("expected ExtractionError");
  } catch (const ExtractionError& e) {
    CHECK(e.column() == column);
  }
}

TEST_CASE("probes on a flat free boundary") {
  HalfPlane s;
  const std::array<double, 2> x0{1.0, 0.5};
  const double r = 0.25;

  // Circle average of lambda max(-Z.nu, 0) over the unit circle is lambda / pi.
  NondegeneracyResult nd = nondegeneracy_probe(s.field, s.lambda, x0, r);
  CHECK(nd.mean == doctest::Approx(s.lambda / std::numbers::pi).epsilon(0.02));
  CHECK_FALSE(nd.small);
  CHECK_FALSE(nd.large);
  CHECK(nd.pass);

  NondegeneracyResult dry = nondegeneracy_probe(s.field, s.lambda, {1.0, 0.8}, 0.15);
  CHECK(dry.mean == 0.0);
  CHECK(dry.small);
  CHECK(dry.inner_dry);
  CHECK(dry.pass);
  NondegeneracyResult wet = nondegeneracy_probe(s.field, s.lambda, {1.0, 0.2}, 0.1);
  CHECK(wet.large);
  CHECK(wet.ball_wet);
  CHECK(wet.pass);

  // Nodes on the interface row are dry, so slightly under one half.
  const double d = density_ratio(s.field, x0, r);
  CHECK(d <= 0.5);
  CHECK(d >= 0.5 - 2 * s.h / r);

  // Flux of grad phi through the lower half circle: 2 lambda r.
  CHECK(ball_measure(s.field, s.zero, x0, r) == doctest::Approx(2 * s.lambda * r).epsilon(0.02));
  CHECK(ball_measure(s.field, s.zero, {1.0, 0.2}, 0.1) == doctest::Approx(0.0).epsilon(1e-9));

  BlowupResult b = blowup_rescale(s.field, s.lambda, x0, r);
  CHECK(b.deviation <= 1e-9);
  CHECK(b.nu_angle == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));
  CHECK(b.z.size() == b.phi.size());

  FlatnessReport f = flatness_measure(s.field, s.lambda, x0, r, {0.0, 1.0});
  CHECK(f.sigma_plus <= s.h / r + 1e-12);
  CHECK(f.sigma_minus <= s.h / r + 1e-12);

  CHECK(phi_at(s.field, 0.7, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(phi_at(s.field, 0.7, 0.75) == 0.0);
  CHECK_THROWS_AS(density_ratio(s.field, {1.0, 0.5}, 0.75), DomainError);
  CHECK_THROWS_AS(density_ratio(s.field, x0, -1.0), InvalidInput);
}

TEST_CASE("a tilted interface is Lipschitz with the tilt as constant") {
  HalfPlane s;
  // Interface y = 0.3 + 0.1 x.
  for (std::size_t k = 0; k < s.field.psi.size(); ++k) {
    const double x = s.grid.x(s.grid.col(k)), y = s.grid.y(s.grid.row(k));
    if (s.grid.interior(k)) s.field.psi[k] = std::min(s.q, s.q + s.lambda * (y - 0.3 - 0.1 * x));
  }
  for (std::size_t k = 0; k < s.field.psi.size(); ++k) s.field.psi[k] = std::max(s.field.psi[k], 0.0);
  s.field.refresh_wet();
  FreeBoundaryCurve c = extract_curve(s.field, s.lambda);
  for (std::size_t n = 0; n < c.size(); ++n) CHECK(std::abs(c.k[n] - 0.3 - 0.1 * c.x[n]) <= s.h);
  CHECK(lipschitz_constant(c, s.h, 0.0, 2.0) <= 0.1 + 1e-9);
}
