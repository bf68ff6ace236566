#include "fbjet/freeboundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace fbjet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool present(const Grid& g, int i, int j) {
  return i >= 0 && j >= 0 && i <= g.nx && j <= g.ny &&
         g.cls[g.index(i, j)] != NodeClass::Exterior;
}

struct BallNode {
  std::size_t k;
  double dx, dy;
};

/// Nodes of B_r(X0); throws if the ball leaves the grid, touches an exterior
/// node or an interior node without the penalty.
std::vector<BallNode> ball_nodes(const Grid& g, std::array<double, 2> c, double r) {
  if (!(r > 0.0)) throw InvalidInput("ball radius must be positive");
  const int i0 = static_cast<int>(std::floor((c[0] - r - g.x0) / g.h));
  const int i1 = static_cast<int>(std::ceil((c[0] + r - g.x0) / g.h));
  const int j0 = static_cast<int>(std::floor((c[1] - r - g.y0) / g.h));
  const int j1 = static_cast<int>(std::ceil((c[1] + r - g.y0) / g.h));
  auto outside = [&] {
    std::ostringstream msg;
    msg << "ball of radius " << r << " at (" << c[0] << ", " << c[1]
        << ") leaves the penalized region";
    return DomainError(msg.str());
  };
  if (i0 < 0 || j0 < 0 || i1 > g.nx || j1 > g.ny) throw outside();
  std::vector<BallNode> nodes;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double dx = g.x(i) - c[0], dy = g.y(j) - c[1];
      if (dx * dx + dy * dy > r * r) continue;
      const std::size_t k = g.index(i, j);
      if (g.cls[k] == NodeClass::Exterior) throw outside();
      if (g.interior(k) && !g.penalized[k]) throw outside();
      nodes.push_back({k, dx, dy});
    }
  }
  return nodes;
}

double phi_node(const StreamField& f, std::size_t k) { return f.grid->q - f.psi[k]; }

/// |grad psi| at node (i, j): central differences, one-sided next to
/// exterior nodes.
double gradient_norm(const StreamField& f, int i, int j) {
  const Grid& g = *f.grid;
  auto d = [&](int di, int dj) {
    const bool fwd = present(g, i + di, j + dj), bwd = present(g, i - di, j - dj);
    const double mid = f.psi[g.index(i, j)];
    if (fwd && bwd)
      return (f.psi[g.index(i + di, j + dj)] - f.psi[g.index(i - di, j - dj)]) / (2 * g.h);
    if (fwd) return (f.psi[g.index(i + di, j + dj)] - mid) / g.h;
    if (bwd) return (mid - f.psi[g.index(i - di, j - dj)]) / g.h;
    return 0.0;
  };
  return std::hypot(d(1, 0), d(0, 1));
}

std::vector<std::array<double, 2>> circle(double r, double h) {
  const int n = std::max(64, 8 * static_cast<int>(std::ceil(2 * std::numbers::pi * r / h)));
  std::vector<std::array<double, 2>> pts(n);
  for (int m = 0; m < n; ++m) {
    const double t = 2 * std::numbers::pi * m / n;
    pts[m] = {std::cos(t), std::sin(t)};
  }
  return pts;
}

}  // namespace

double phi_at(const StreamField& field, double x, double y) {
  const Grid& g = *field.grid;
  const double u = (x - g.x0) / g.h, v = (y - g.y0) / g.h;
  int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
  i = std::clamp(i, 0, g.nx - 1);
  j = std::clamp(j, 0, g.ny - 1);
  const double s = u - i, t = v - j;
  if (s < -1e-9 || s > 1 + 1e-9 || t < -1e-9 || t > 1 + 1e-9) {
    std::ostringstream msg;
    msg << "point (" << x << ", " << y << ") is outside the grid";
    throw DomainError(msg.str());
  }
  for (int dj = 0; dj <= 1; ++dj)
    for (int di = 0; di <= 1; ++di)
      if (!present(g, i + di, j + dj)) {
        std::ostringstream msg;
        msg << "point (" << x << ", " << y << ") touches an exterior node";
        throw DomainError(msg.str());
      }
  auto at = [&](int di, int dj) { return phi_node(field, g.index(i + di, j + dj)); };
  return (1 - s) * (1 - t) * at(0, 0) + s * (1 - t) * at(1, 0) + (1 - s) * t * at(0, 1) +
         s * t * at(1, 1);
}

FreeBoundaryCurve extract_curve(const StreamField& field, double lambda_floor) {
  const Grid& g = *field.grid;
  FreeBoundaryCurve curve;
  for (int i = 0; i <= g.nx; ++i) {
    bool penalized = false;
    int bottom = -1, top = -1;
    for (int j = 0; j <= g.ny; ++j) {
      const std::size_t k = g.index(i, j);
      if (g.cls[k] == NodeClass::Exterior) continue;
      if (bottom < 0) bottom = j;
      top = j;
      penalized = penalized || (g.interior(k) && g.penalized[k]);
    }
    if (!penalized) continue;
    int last = -1;
    bool dry_seen = false;
    for (int j = bottom; j <= top; ++j) {
      const std::size_t k = g.index(i, j);
      if (g.cls[k] == NodeClass::Exterior) continue;
      if (field.psi[k] < g.q) {
        if (dry_seen) {
          std::ostringstream msg;
          msg << "column " << i << " (x = " << g.x(i)
              << ") has more than one wet block; first dry row below row " << j;
          throw ExtractionError(i, msg.str());
        }
        last = j;
      } else {
        dry_seen = true;
      }
    }
    double k;
    bool truncated = false;
    bool all_interior_wet = true;
    for (int j = bottom; j <= top; ++j) {
      const std::size_t n = g.index(i, j);
      if (g.interior(n) && !(field.psi[n] < g.q)) all_interior_wet = false;
    }
    if (last < 0) {
      k = g.y(bottom);
    } else if (last == top || (all_interior_wet && last + 1 == top)) {
      k = g.y(top);
      truncated = true;
    } else {
      const double psi = field.psi[g.index(i, last)];
      double slope = lambda_floor;
      if (last > bottom && present(g, i, last - 1))
        slope = std::max(slope, (psi - field.psi[g.index(i, last - 1)]) / g.h);
      k = g.y(last) + (g.q - psi) / slope;
    }
    curve.x.push_back(g.x(i));
    curve.k.push_back(k);
    curve.column.push_back(i);
    curve.last_wet.push_back(last);
    curve.truncated.push_back(truncated);
  }
  curve.grad_mag.assign(curve.size(), kNaN);
  const GradientSamples samples = boundary_gradient(field, curve);
  std::size_t next = 0;
  for (std::size_t n = 0; n < curve.size() && next < samples.x.size(); ++n)
    if (curve.x[n] == samples.x[next]) curve.grad_mag[n] = samples.value[next++];
  curve.skipped_gradients = samples.skipped;
  return curve;
}

GradientSamples boundary_gradient(const StreamField& field, const FreeBoundaryCurve& curve) {
  const Grid& g = *field.grid;
  GradientSamples out;
  for (std::size_t n = 0; n < curve.size(); ++n) {
    const int i = curve.column[n], j = curve.last_wet[n];
    if (curve.truncated[n] || j < 0) {
      ++out.skipped;
      continue;
    }
    bool clear = true;
    for (int dj = -2; dj <= 2 && clear; ++dj)
      for (int di = -2; di <= 2 && clear; ++di)
        clear = present(g, i + di, j + dj) && g.interior(g.index(i + di, j + dj));
    if (!clear) {
      ++out.skipped;
      continue;
    }
    out.x.push_back(curve.x[n]);
    out.value.push_back(gradient_norm(field, i, j - 1));
  }
  return out;
}

std::vector<std::array<double, 2>> interface_points(const StreamField& field, double lambda) {
  const Grid& g = *field.grid;
  std::vector<std::array<double, 2>> pts;
  auto edge = [&](int i, int j, int di, int dj) {
    if (!present(g, i, j) || !present(g, i + di, j + dj)) return;
    const std::size_t p = g.index(i, j), q = g.index(i + di, j + dj);
    const bool wp = field.psi[p] < g.q, wq = field.psi[q] < g.q;
    if (wp == wq) return;
    const std::size_t w = wp ? p : q;
    const double sign = wp ? 1.0 : -1.0;
    const double s = std::min(1.0, phi_node(field, w) / (lambda * g.h));
    const double bx = wp ? g.x(i) : g.x(i + di), by = wp ? g.y(j) : g.y(j + dj);
    pts.push_back({bx + sign * s * di * g.h, by + sign * s * dj * g.h});
  };
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      edge(i, j, 1, 0);
      edge(i, j, 0, 1);
    }
  return pts;
}

std::array<double, 2> curve_normal(const FreeBoundaryCurve& curve, std::size_t n) {
  if (curve.size() < 2) return {0.0, 1.0};
  const std::size_t a = n == 0 ? 0 : n - 1, b = std::min(n + 1, curve.size() - 1);
  const double slope = (curve.k[b] - curve.k[a]) / (curve.x[b] - curve.x[a]);
  const double norm = std::hypot(slope, 1.0);
  return {-slope / norm, 1.0 / norm};
}

FlatnessReport flatness_measure(const StreamField& field, double lambda,
                                std::array<double, 2> center, double rho,
                                std::array<double, 2> nu) {
  const Grid& g = *field.grid;
  const auto nodes = ball_nodes(g, center, rho);
  const double norm = std::hypot(nu[0], nu[1]);
  nu = {nu[0] / norm, nu[1] / norm};
  bool any_wet = false, any_dry = false;
  double plus = 0.0, minus = 0.0, grad = 0.0;
  for (const BallNode& b : nodes) {
    const double d = b.dx * nu[0] + b.dy * nu[1];
    const double phi = phi_node(field, b.k);
    const bool wet = field.psi[b.k] < g.q;
    any_wet = any_wet || wet;
    any_dry = any_dry || !wet;
    if (wet) plus = std::max(plus, d / rho);
    minus = std::max(minus, (-d - phi / lambda) / rho);
    grad = std::max(grad, gradient_norm(field, g.col(b.k), g.row(b.k)));
  }
  if (!any_wet || !any_dry)
    throw DomainError("flatness ball does not meet the free boundary");
  FlatnessReport report;
  report.center = center;
  report.nu = nu;
  report.rho = rho;
  const double floor = g.h / rho;
  report.sigma_plus = std::clamp(plus, floor, 1.0);
  report.sigma_minus = std::clamp(minus, floor, 1.0);
  report.delta = std::max(0.0, grad / lambda - 1.0);
  return report;
}

NondegeneracyResult nondegeneracy_probe(const StreamField& field, double lambda,
                                        std::array<double, 2> center, double r,
                                        const NondegeneracyConstants& constants) {
  const Grid& g = *field.grid;
  const auto dirs = circle(r, g.h);
  double sum = 0.0;
  for (const auto& d : dirs) sum += phi_at(field, center[0] + r * d[0], center[1] + r * d[1]);
  NondegeneracyResult res;
  res.mean = sum / static_cast<double>(dirs.size()) / r;
  res.small = res.mean <= constants.c_star * lambda;
  res.large = res.mean >= constants.C_star * lambda;
  res.inner_dry = true;
  for (const BallNode& b : ball_nodes(g, center, constants.kappa * r))
    res.inner_dry = res.inner_dry && !(field.psi[b.k] < g.q);
  res.ball_wet = true;
  for (const BallNode& b : ball_nodes(g, center, r))
    res.ball_wet = res.ball_wet && field.psi[b.k] < g.q;
  res.pass = (!res.small || res.inner_dry) && (!res.large || res.ball_wet);
  return res;
}

double density_ratio(const StreamField& field, std::array<double, 2> center, double r) {
  const Grid& g = *field.grid;
  const auto nodes = ball_nodes(g, center, r);
  std::size_t wet = 0;
  for (const BallNode& b : nodes) wet += field.psi[b.k] < g.q;
  return static_cast<double>(wet) / static_cast<double>(nodes.size());
}

double ball_measure(const StreamField& field, const VorticityTables& tables,
                    std::array<double, 2> center, double r) {
  const Grid& g = *field.grid;
  const auto dirs = circle(r, g.h);
  const double half = 0.5 * g.h;
  double flux = 0.0;
  for (const auto& d : dirs) {
    const double out = phi_at(field, center[0] + (r + half) * d[0], center[1] + (r + half) * d[1]);
    const double in = phi_at(field, center[0] + (r - half) * d[0], center[1] + (r - half) * d[1]);
    flux += (out - in) / g.h;
  }
  flux *= 2 * std::numbers::pi * r / static_cast<double>(dirs.size());
  double source = 0.0;
  if (!tables.is_zero())
    for (const BallNode& b : ball_nodes(g, center, r))
      if (field.psi[b.k] < g.q) source += tables.f(field.psi[b.k]);
  return flux - g.h * g.h * source;
}

BlowupResult blowup_rescale(const StreamField& field, double lambda,
                            std::array<double, 2> center, double r) {
  constexpr int kPerSide = 16;
  BlowupResult res;
  for (int b = -kPerSide; b <= kPerSide; ++b)
    for (int a = -kPerSide; a <= kPerSide; ++a) {
      const double zx = static_cast<double>(a) / kPerSide, zy = static_cast<double>(b) / kPerSide;
      if (zx * zx + zy * zy > 1.0) continue;
      res.z.push_back({zx, zy});
      res.phi.push_back(phi_at(field, center[0] + r * zx, center[1] + r * zy) / r);
    }
  auto residual = [&](double angle) {
    const double nx = std::cos(angle), ny = std::sin(angle);
    double s = 0.0;
    for (std::size_t n = 0; n < res.z.size(); ++n) {
      const double e = res.phi[n] - lambda * std::max(-(res.z[n][0] * nx + res.z[n][1] * ny), 0.0);
      s += e * e;
    }
    return s;
  };
  constexpr int kScan = 720;
  double best = 0.0, best_value = std::numeric_limits<double>::infinity();
  for (int m = 0; m < kScan; ++m) {
    const double angle = 2 * std::numbers::pi * m / kScan;
    const double v = residual(angle);
    if (v < best_value) {
      best_value = v;
      best = angle;
    }
  }
  const double step = 2 * std::numbers::pi / kScan;
  const auto refined =
      boost::math::tools::brent_find_minima(residual, best - step, best + step, 40);
  res.nu_angle = refined.first;
  const double nx = std::cos(res.nu_angle), ny = std::sin(res.nu_angle);
  for (std::size_t n = 0; n < res.z.size(); ++n)
    res.deviation = std::max(
        res.deviation,
        std::abs(res.phi[n] - lambda * std::max(-(res.z[n][0] * nx + res.z[n][1] * ny), 0.0)));
  return res;
}

double lipschitz_constant(const FreeBoundaryCurve& curve, double h, double x_lo, double x_hi) {
  double c = 0.0;
  for (std::size_t a = 0; a < curve.size(); ++a) {
    if (curve.x[a] < x_lo || curve.x[a] > x_hi) continue;
    for (std::size_t b = a + 1; b < curve.size(); ++b) {
      if (curve.x[b] < x_lo || curve.x[b] > x_hi) continue;
      const double excess = std::abs(curve.k[a] - curve.k[b]) - 2 * h;
      if (excess > 0) c = std::max(c, excess / std::abs(curve.x[a] - curve.x[b]));
    }
  }
  return c;
}

double bernoulli_median(const GradientSamples& samples, double lambda, double x_lo,
                        double x_hi) {
  std::vector<double> dev;
  for (std::size_t n = 0; n < samples.x.size(); ++n)
    if (samples.x[n] >= x_lo && samples.x[n] <= x_hi)
      dev.push_back(std::abs(samples.value[n] - lambda) / lambda);
  if (dev.empty()) return kNaN;
  const std::size_t mid = dev.size() / 2;
  std::nth_element(dev.begin(), dev.begin() + static_cast<std::ptrdiff_t>(mid), dev.end());
  if (dev.size() % 2) return dev[mid];
  const double upper = dev[mid];
  return 0.5 * (upper + *std::max_element(dev.begin(), dev.begin() + static_cast<std::ptrdiff_t>(mid)));
}

void write_curve(std::ostream& out, const FreeBoundaryCurve& curve) {
  out << "x k grad\n";
  char buf[96];
  for (std::size_t n = 0; n < curve.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", curve.x[n], curve.k[n], curve.grad_mag[n]);
    out << buf;
  }
}

}  // namespace fbjet
