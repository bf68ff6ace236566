#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbjet {

// Error families shared by every module. The CLI maps them onto exit codes.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b]. Throws if the error
/// estimate exceeds abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

/// Root of a continuous increasing function on [lo, hi] (f(lo) <= 0 <= f(hi))
/// by safeguarded Newton: a Newton step is taken when it stays inside the
/// current bracket, otherwise the bracket is bisected.
double monotone_root(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo,
                     double hi, double x_tol, double f_tol,
                     int max_iter = 200);

/// Piecewise cubic Hermite interpolant on strictly increasing knots.
class CubicHermite {
 public:
  CubicHermite() = default;
  CubicHermite(std::vector<double> x, std::vector<double> y,
               std::vector<double> dy);

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  /// Exact integral of the interpolant from x.front() to t.
  double integral_to(double t) const;

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  std::span<const double> knots() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  std::size_t segment(double t) const;

  std::vector<double> x_, y_, dy_;
  std::vector<double> cumulative_;  // integral up to each knot
};

/// Monotone (Fritsch-Carlson) slopes for data (x, y). The slope at the left
/// end is pinned to left_slope.
std::vector<double> monotone_slopes(std::span<const double> x,
                                    std::span<const double> y,
                                    double left_slope);

/// Cubic Hermite table on a uniform grid, for O(1) evaluation in hot loops.
/// Outside [front, back] the value is extended linearly with the end slope.
class UniformHermite {
 public:
  UniformHermite() = default;
  UniformHermite(double t0, double dt, std::vector<double> y,
                 std::vector<double> dy);

  double value(double t) const {
    double s = (t - t0_) * inv_dt_;
    if (s <= 0.0) return y_.front() + dy_.front() * (t - t0_);
    if (s >= last_) return y_.back() + dy_.back() * (t - back_);
    std::size_t k = static_cast<std::size_t>(s);
    double u = s - static_cast<double>(k);
    double y0 = y_[k], y1 = y_[k + 1];
    double m0 = dy_[k] * dt_, m1 = dy_[k + 1] * dt_;
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 +
           (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
  }

  double derivative(double t) const {
    double s = (t - t0_) * inv_dt_;
    if (s <= 0.0) return dy_.front();
    if (s >= last_) return dy_.back();
    std::size_t k = static_cast<std::size_t>(s);
    double u = s - static_cast<double>(k);
    double y0 = y_[k], y1 = y_[k + 1];
    double m0 = dy_[k] * dt_, m1 = dy_[k + 1] * dt_;
    double u2 = u * u;
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 +
            (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) *
           inv_dt_;
  }

  double front() const { return t0_; }
  double back() const { return back_; }

 private:
  double t0_ = 0.0, dt_ = 1.0, inv_dt_ = 1.0, back_ = 0.0, last_ = 0.0;
  std::vector<double> y_, dy_;
};

}  // namespace fbjet
