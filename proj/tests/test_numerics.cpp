#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fbjet/numerics.hpp"

using namespace fbjet;

TEST_CASE("integrate is exact on polynomials and handles reversed limits") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(integrate([](double x) { return x * x; }, 1.0, 0.0) == doctest::Approx(-1.0 / 3).epsilon(1e-14));
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 2.0) ==
        doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("monotone_root finds cube roots inside the bracket") {
  for (double c : {0.5, 2.0, 7.0}) {
    double r = monotone_root([c](double x) { return x * x * x - c; },
                             [](double x) { return 3 * x * x; }, 0.0, 3.0, 1e-15, 0.0);
    CHECK(r == doctest::Approx(std::cbrt(c)).epsilon(1e-14));
  }
}

TEST_CASE("cubic Hermite reproduces a cubic and its integral") {
  auto p = [](double x) { return 1 - 2 * x + 0.5 * x * x * x; };
  auto dp = [](double x) { return -2 + 1.5 * x * x; };
  std::vector<double> x{0.0, 0.3, 1.1, 2.0}, y, dy;
  for (double t : x) {
    y.push_back(p(t));
    dy.push_back(dp(t));
  }
  CubicHermite h(x, y, dy);
  for (double t : {0.0, 0.2, 0.77, 1.5, 2.0}) {
    CHECK(h.value(t) == doctest::Approx(p(t)).epsilon(1e-13));
    CHECK(h.derivative(t) == doctest::Approx(dp(t)).epsilon(1e-12));
    CHECK(h.second_derivative(t) == doctest::Approx(3 * t).epsilon(1e-11));
  }
  const double exact = 1.5 - 1.5 * 1.5 + 0.125 * std::pow(1.5, 4);
  CHECK(h.integral_to(1.5) == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("monotone slopes keep the interpolant monotone") {
  std::vector<double> x{0, 1, 2, 3, 4, 5}, y{0, 0.1, 0.1, 2.0, 2.1, 5.0};
  auto dy = monotone_slopes(x, y, 0.0);
  CHECK(dy[0] == 0.0);
  CubicHermite h(x, y, dy);
  double prev = h.value(0.0);
  for (int n = 1; n <= 500; ++n) {
    double v = h.value(5.0 * n / 500);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("uniform Hermite agrees with the general table and extends linearly") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 33;
  std::vector<double> x, y, dy;
  for (int k = 0; k < n; ++k) {
    x.push_back(k * 0.125);
    y.push_back(std::sin(x.back()));
    dy.push_back(std::cos(x.back()));
  }
  CubicHermite general(x, y, dy);
  UniformHermite fast(0.0, 0.125, y, dy);
  for (int k = 0; k < 200; ++k) {
    double t = 4.0 * u(rng);
    CHECK(fast.value(t) == doctest::Approx(general.value(t)).epsilon(1e-13));
    CHECK(fast.derivative(t) == doctest::Approx(general.derivative(t)).epsilon(1e-12));
  }
  CHECK(fast.value(-1.0) == doctest::Approx(y.front() - dy.front()));
  CHECK(fast.derivative(5.0) == doctest::Approx(dy.back()));
}
