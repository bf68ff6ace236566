#include "fbjet/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fbjet {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double error = 0.0, l1 = 0.0;
  double value = Rule::integrate(f, a, b, 0, 0.0, &error, &l1);
  if (error > 0.25 * abs_tol) {
    // Relative tolerance against the L1 norm, floored so that the recursion
    // stops at the rounding level instead of compounding it.
    double rel = std::max(0.25 * abs_tol / std::max(l1, 1e-300), 1e-15);
    value = Rule::integrate(f, a, b, 15, rel, &error);
  }
  if (!std::isfinite(value) || error > abs_tol) {
    std::ostringstream msg;
    msg << "integrate: error estimate " << error << " exceeds tolerance "
        << abs_tol << " on [" << a << ", " << b << "]";
    throw DomainError(msg.str());
  }
  return value;
}

double monotone_root(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo,
                     double hi, double x_tol, double f_tol, int max_iter) {
  double flo = f(lo);
  if (std::abs(flo) <= f_tol) return lo;
  double fhi = f(hi);
  if (std::abs(fhi) <= f_tol) return hi;
  if (flo > 0.0 || fhi < 0.0) {
    std::ostringstream msg;
    msg << "monotone_root: no sign change on [" << lo << ", " << hi << "]";
    throw DomainError(msg.str());
  }
  double x = lo - flo * (hi - lo) / (fhi - flo);
  for (int it = 0; it < max_iter; ++it) {
    double fx = f(x);
    if (std::abs(fx) <= f_tol) return x;
    if (fx < 0.0) lo = x; else hi = x;
    if (hi - lo <= x_tol) return 0.5 * (lo + hi);
    double d = df(x);
    double next = (d > 0.0) ? x - fx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

CubicHermite::CubicHermite(std::vector<double> x, std::vector<double> y,
                           std::vector<double> dy)
    : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)) {
  if (x_.size() < 2 || y_.size() != x_.size() || dy_.size() != x_.size())
    throw InvalidInput("CubicHermite: need >= 2 knots with matching data");
  for (std::size_t k = 1; k < x_.size(); ++k)
    if (!(x_[k] > x_[k - 1]))
      throw InvalidInput("CubicHermite: knots must be strictly increasing");
  cumulative_.assign(x_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
    double d = x_[k + 1] - x_[k];
    // Simpson is exact for cubics.
    cumulative_[k + 1] = cumulative_[k] + d / 2.0 * (y_[k] + y_[k + 1]) +
                         d * d / 12.0 * (dy_[k] - dy_[k + 1]);
  }
}

std::size_t CubicHermite::segment(double t) const {
  if (t <= x_.front()) return 0;
  if (t >= x_.back()) return x_.size() - 2;
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double CubicHermite::value(double t) const {
  std::size_t k = segment(t);
  double d = x_[k + 1] - x_[k];
  double u = (t - x_[k]) / d;
  double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y_[k] + (u3 - 2 * u2 + u) * d * dy_[k] +
         (-2 * u3 + 3 * u2) * y_[k + 1] + (u3 - u2) * d * dy_[k + 1];
}

double CubicHermite::derivative(double t) const {
  std::size_t k = segment(t);
  double d = x_[k + 1] - x_[k];
  double u = (t - x_[k]) / d;
  double u2 = u * u;
  return ((6 * u2 - 6 * u) * y_[k] + (3 * u2 - 4 * u + 1) * d * dy_[k] +
          (-6 * u2 + 6 * u) * y_[k + 1] + (3 * u2 - 2 * u) * d * dy_[k + 1]) /
         d;
}

double CubicHermite::second_derivative(double t) const {
  std::size_t k = segment(t);
  double d = x_[k + 1] - x_[k];
  double u = (t - x_[k]) / d;
  return ((12 * u - 6) * y_[k] + (6 * u - 4) * d * dy_[k] +
          (-12 * u + 6) * y_[k + 1] + (6 * u - 2) * d * dy_[k + 1]) /
         (d * d);
}

double CubicHermite::integral_to(double t) const {
  t = std::clamp(t, x_.front(), x_.back());
  std::size_t k = segment(t);
  double d = x_[k + 1] - x_[k];
  double u = (t - x_[k]) / d;
  double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  // Antiderivatives of the Hermite basis on [0, u].
  double h00 = u4 / 2 - u3 + u;
  double h10 = u4 / 4 - 2 * u3 / 3 + u2 / 2;
  double h01 = -u4 / 2 + u3;
  double h11 = u4 / 4 - u3 / 3;
  return cumulative_[k] + d * (h00 * y_[k] + h10 * d * dy_[k] +
                               h01 * y_[k + 1] + h11 * d * dy_[k + 1]);
}

std::vector<double> monotone_slopes(std::span<const double> x,
                                    std::span<const double> y,
                                    double left_slope) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 2) return m;
  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k)
    delta[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
  m[0] = left_slope;
  m[n - 1] = delta[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      m[k] = 0.0;
    } else {
      // Weighted harmonic mean (Fritsch-Butland form).
      double w1 = 2 * (x[k + 1] - x[k]) + (x[k] - x[k - 1]);
      double w2 = (x[k + 1] - x[k]) + 2 * (x[k] - x[k - 1]);
      m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  return m;
}

UniformHermite::UniformHermite(double t0, double dt, std::vector<double> y,
                               std::vector<double> dy)
    : t0_(t0), dt_(dt), inv_dt_(1.0 / dt), y_(std::move(y)), dy_(std::move(dy)) {
  if (y_.size() < 2 || dy_.size() != y_.size() || !(dt > 0.0))
    throw InvalidInput("UniformHermite: need >= 2 samples and dt > 0");
  last_ = static_cast<double>(y_.size() - 1);
  back_ = t0_ + dt_ * last_;
}

}  // namespace fbjet
