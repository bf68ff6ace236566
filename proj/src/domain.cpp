#include "fbjet/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fbjet {

// ---------------------------------------------------------------------------
// NozzleGeometry

NozzleGeometry::NozzleGeometry(std::string name, std::function<double(double)> g,
                               std::function<double(double)> dg, double H)
    : name_(std::move(name)), g_(std::move(g)), dg_(std::move(dg)), H_(H) {
  a_ = g_(0.0);
  if (!(a_ > 0.0)) throw InvalidInput("nozzle: outlet height g(0) must be positive");
  if (!(H_ >= a_ * (1 - 1e-14)))
    throw InvalidInput("nozzle: upstream height H must be at least a = g(0)");
  constexpr int kSamples = 20000;
  constexpr double kRange = 50.0;
  H_bar_ = std::max(H_, a_);
  for (int k = 1; k <= kSamples; ++k) {
    double x = -kRange * k / kSamples;
    double g = g_(x);
    if (g < a_ - 1e-12) {
      std::ostringstream msg;
      msg << "nozzle '" << name_ << "': g(" << x << ") = " << g
          << " is below a = g(0) = " << a_ << "; a must be the minimum";
      throw InvalidInput(msg.str());
    }
    H_bar_ = std::max(H_bar_, g);
  }
}

NozzleGeometry NozzleGeometry::straight(double H) {
  if (!(H > 0.0)) throw InvalidInput("nozzle: height must be positive");
  return NozzleGeometry("straight", [H](double) { return H; },
                        [](double) { return 0.0; }, H);
}

NozzleGeometry NozzleGeometry::rational(double a, double H) {
  if (!(a > 0.0) || !(H >= a))
    throw InvalidInput("nozzle: rational preset needs 0 < a <= H");
  double d = H - a;
  return NozzleGeometry(
      "rational", [a, d](double x) { return a + d * x * x / (1.0 + x * x); },
      [d](double x) {
        double s = 1.0 + x * x;
        return 2.0 * d * x / (s * s);
      },
      H);
}

NozzleGeometry NozzleGeometry::converging_tanh(double a, double H, double width) {
  if (!(a > 0.0) || !(H >= a) || !(width > 0.0))
    throw InvalidInput("nozzle: tanh preset needs 0 < a <= H and width > 0");
  double d = H - a;
  return NozzleGeometry(
      "converging_tanh",
      [a, d, width](double x) {
        double t = std::tanh(x / width);
        return a + d * t * t;
      },
      [d, width](double x) {
        double t = std::tanh(x / width);
        return 2.0 * d * t * (1.0 - t * t) / width;
      },
      H);
}

NozzleGeometry NozzleGeometry::polyline(std::vector<double> x, std::vector<double> g) {
  if (x.size() < 2 || x.size() != g.size())
    throw InvalidInput("nozzle: polyline needs >= 2 matching samples");
  if (x.back() != 0.0) throw InvalidInput("nozzle: polyline must end at x = 0");
  for (std::size_t k = 1; k < x.size(); ++k)
    if (!(x[k] > x[k - 1]))
      throw InvalidInput("nozzle: polyline abscissae must increase");
  auto locate = [x](double t) {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t k = static_cast<std::size_t>(it - x.begin());
    return std::clamp<std::size_t>(k, 1, x.size() - 1) - 1;
  };
  double H = g.front();
  auto value = [x, g, locate](double t) {
    if (t <= x.front()) return g.front();
    if (t >= x.back()) return g.back();
    std::size_t k = locate(t);
    double w = (t - x[k]) / (x[k + 1] - x[k]);
    return g[k] + w * (g[k + 1] - g[k]);
  };
  auto slope = [x, g, locate](double t) {
    if (t < x.front()) return 0.0;
    std::size_t k = locate(std::min(t, x.back()));
    if (t >= x.back()) k = x.size() - 2;
    return (g[k + 1] - g[k]) / (x[k + 1] - x[k]);
  };
  return NozzleGeometry("polyline", value, slope, H);
}

NozzleGeometry NozzleGeometry::custom(std::string name, std::function<double(double)> g,
                                      std::function<double(double)> g_prime, double H) {
  return NozzleGeometry(std::move(name), std::move(g), std::move(g_prime), H);
}

void NozzleGeometry::check_truncation(double L, double tol) const {
  double gap = std::abs(g_(-L) - H_);
  if (gap > tol) {
    std::ostringstream msg;
    msg << "nozzle '" << name_ << "': |g(-L) - H| = " << gap << " exceeds " << tol
        << " at L = " << L;
    throw ConfigError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Truncated domain

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::None: return "interior";
    case BoundaryTag::Bottom: return "bottom";
    case BoundaryTag::Wall: return "wall";
    case BoundaryTag::Lip: return "lip";
    case BoundaryTag::Top: return "top";
    case BoundaryTag::Inlet: return "inlet";
    case BoundaryTag::Outlet: return "outlet";
    case BoundaryTag::Side: return "side";
  }
  return "unknown";
}

const BoundarySegment& TruncatedDomain::segment(const std::string& name) const {
  for (const auto& s : segments)
    if (s.name == name) return s;
  throw InvalidInput("truncated domain: no segment named " + name);
}

TruncatedDomain build_domain(const NozzleGeometry& geometry, double L,
                             double upstream_tol) {
  if (!(L > geometry.H_bar())) {
    std::ostringstream msg;
    msg << "truncated domain: L = " << L << " must exceed H_bar = " << geometry.H_bar();
    throw ConfigError(msg.str());
  }
  geometry.check_truncation(L, upstream_tol);
  TruncatedDomain d;
  d.L = L;
  d.geometry = &geometry;
  const double top_in = geometry(-L), a = geometry.a();
  using P = std::array<double, 2>;
  d.segments.push_back({"sigma_-L", BoundaryTag::Inlet,
                        [L, top_in](double s) { return P{-L, s * top_in}; }, top_in});
  d.segments.push_back(
      {"sigma_L", BoundaryTag::Outlet, [L](double s) { return P{L, s * L}; }, L});
  d.segments.push_back({"T_L", BoundaryTag::Bottom,
                        [L](double s) { return P{-L + 2.0 * L * s, 0.0}; }, 2.0 * L});
  // Nozzle wall from (-L, g(-L)) to A = (0, a); arc length by quadrature.
  const NozzleGeometry* g = &geometry;
  double wall_length = integrate(
      [g](double x) {
        double s = g->slope(x);
        return std::sqrt(1.0 + s * s);
      },
      -L, 0.0, 1e-8);
  d.segments.push_back({"N_L", BoundaryTag::Wall,
                        [L, g](double s) {
                          double x = -L + L * s;
                          return P{x, (*g)(x)};
                        },
                        wall_length});
  d.segments.push_back({"I_0L", BoundaryTag::Lip,
                        [a, L](double s) { return P{0.0, a + (L - a) * s}; }, L - a});
  // Upper half of the circle of radius L/2 about (L/2, L), from (0, L) to (L, L).
  const double r = L / 2.0;
  d.segments.push_back({"l_L", BoundaryTag::Top,
                        [r, L](double s) {
                          double theta = std::numbers::pi * (1.0 - s);
                          return P{r + r * std::cos(theta), L + r * std::sin(theta)};
                        },
                        std::numbers::pi * r});
  return d;
}

// ---------------------------------------------------------------------------
// Grid

void Grid::finalize() {
  const int s = stride();
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      std::size_t k = index(i, j);
      if (cls[k] != NodeClass::Dirichlet) continue;
      bool touches = (i > 0 && interior(k - 1)) || (i < nx && interior(k + 1)) ||
                     (j > 0 && interior(k - s)) || (j < ny && interior(k + s));
      if (!touches) cls[k] = NodeClass::Exterior;
    }
  }
  lex.clear();
  red.clear();
  black.clear();
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      std::size_t k = index(i, j);
      if (!interior(k)) continue;
      if (i == 0 || i == nx || j == 0 || j == ny)
        throw InvalidInput("grid: interior node on the lattice edge");
      lex.push_back(static_cast<std::uint32_t>(k));
      ((i + j) % 2 == 0 ? red : black).push_back(static_cast<std::uint32_t>(k));
    }
  }
}

namespace {

Grid blank_grid(double x0, double y0, double h, int nx, int ny) {
  Grid g;
  g.h = h;
  g.x0 = x0;
  g.y0 = y0;
  g.nx = nx;
  g.ny = ny;
  g.cls.assign(g.size(), NodeClass::Interior);
  g.tag.assign(g.size(), BoundaryTag::None);
  g.value.assign(g.size(), 0.0);
  g.penalized.assign(g.size(), 0);
  return g;
}

int cells(double length, double h, const char* what) {
  double n = length / h;
  long r = std::lround(n);
  if (r <= 0 || std::abs(n - static_cast<double>(r)) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream msg;
    msg << "grid: spacing " << h << " does not divide " << what << " = " << length;
    throw ConfigError(msg.str());
  }
  return static_cast<int>(r);
}

}  // namespace

Grid rasterize(const TruncatedDomain& domain, double h_grid) {
  const NozzleGeometry& geo = *domain.geometry;
  const double L = domain.L;
  if (!(h_grid > 0.0)) throw ConfigError("grid: spacing must be positive");
  const double across = std::min(geo.a(), geo.H());
  if (across / h_grid < 8.0 * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "grid: spacing " << h_grid << " gives fewer than 8 cells across "
        << across;
    throw ConfigError(msg.str());
  }
  const int nx = cells(2.0 * L, h_grid, "2L");
  const int ny = cells(L, h_grid, "L");
  Grid g = blank_grid(-L, 0.0, h_grid, nx, ny);
  g.length_scale = geo.H_bar();
  const double eps = 1e-9 * h_grid;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double x = (i == nx) ? L : g.x(i), y = g.y(j);
      BoundaryTag t = BoundaryTag::None;
      if (j == 0) {
        t = BoundaryTag::Bottom;
      } else if (x < -eps) {
        if (y >= geo(x) - eps) t = BoundaryTag::Wall;
        else if (i == 0) t = BoundaryTag::Inlet;
      } else if (x <= eps) {
        if (y >= geo.a() - eps) t = BoundaryTag::Lip;
      } else if (j == ny) {
        t = BoundaryTag::Top;
      } else if (i == nx) {
        t = BoundaryTag::Outlet;
      }
      g.tag[k] = t;
      if (t != BoundaryTag::None) {
        g.cls[k] = NodeClass::Dirichlet;
      } else {
        g.penalized[k] = x > eps ? 1 : 0;
      }
    }
  }
  g.finalize();
  return g;
}

void assemble_dirichlet(Grid& grid, const DownstreamState& downstream,
                        const InletProfile& inlet) {
  const double q = downstream.profile().flux();
  const double h = downstream.height();
  grid.q = q;
  // Psi_lambda accumulated up the outlet column.
  std::vector<double> outlet(static_cast<std::size_t>(grid.ny) + 1, q);
  {
    double acc = 0.0, y_prev = 0.0;
    outlet[0] = 0.0;
    for (int j = 1; j <= grid.ny; ++j) {
      double y = grid.y(j);
      if (y_prev < h) {
        double b = std::min(y, h);
        acc += integrate([&](double t) { return downstream.velocity(t); }, y_prev, b,
                         1e-12);
        y_prev = b;
      }
      outlet[static_cast<std::size_t>(j)] = (y >= h) ? q : std::min(acc, q);
    }
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid.cls[k] == NodeClass::Interior) continue;
    const int j = grid.row(k);
    switch (grid.tag[k]) {
      case BoundaryTag::Bottom: grid.value[k] = 0.0; break;
      case BoundaryTag::Wall:
      case BoundaryTag::Lip:
      case BoundaryTag::Top: grid.value[k] = q; break;
      case BoundaryTag::Inlet: grid.value[k] = std::clamp(inlet(grid.y(j)), 0.0, q); break;
      case BoundaryTag::Outlet: grid.value[k] = outlet[static_cast<std::size_t>(j)]; break;
      default: break;
    }
  }
}

Grid rectangle_grid(double width, double height, double h, double q,
                    const std::function<double(double)>& side) {
  const int nx = cells(width, h, "width");
  const int ny = cells(height, h, "height");
  Grid g = blank_grid(0.0, 0.0, h, nx, ny);
  g.q = q;
  g.length_scale = height;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const std::size_t k = g.index(i, j);
      BoundaryTag t = BoundaryTag::None;
      double v = 0.0;
      if (j == 0) {
        t = BoundaryTag::Bottom;
      } else if (j == ny) {
        t = BoundaryTag::Top;
        v = q;
      } else if (i == 0 || i == nx) {
        t = BoundaryTag::Side;
        v = std::clamp(side(g.y(j)), 0.0, q);
      }
      g.tag[k] = t;
      g.value[k] = v;
      if (t != BoundaryTag::None) g.cls[k] = NodeClass::Dirichlet;
      else g.penalized[k] = 1;
    }
  }
  g.finalize();
  return g;
}

Grid disk_grid(double radius, double h, double q,
               const std::function<double(double, double)>& value) {
  if (!(radius > 0.0) || !(h > 0.0)) throw ConfigError("disk grid: bad radius or spacing");
  const int n = static_cast<int>(std::ceil(radius / h)) + 1;
  Grid g = blank_grid(-n * h, -n * h, h, 2 * n, 2 * n);
  g.q = q;
  g.length_scale = radius;
  const double r2 = radius * radius * (1.0 - 1e-12);
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double x = g.x(i), y = g.y(j);
      if (x * x + y * y < r2) {
        g.penalized[k] = 1;
      } else {
        g.cls[k] = NodeClass::Dirichlet;
        g.tag[k] = BoundaryTag::Side;
        g.value[k] = value(x, y);
      }
    }
  }
  g.finalize();
  return g;
}

void write_grid(std::ostream& out, const Grid& grid) {
  out << "x y class value\n";
  char buf[128];
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const char* c = grid.cls[k] == NodeClass::Interior   ? "interior"
                    : grid.cls[k] == NodeClass::Dirichlet ? "dirichlet"
                                                          : "exterior";
    std::snprintf(buf, sizeof buf, "%.10g %.10g %s %.17g\n", grid.x(grid.col(k)),
                  grid.y(grid.row(k)), c, grid.value[k]);
    out << buf;
  }
}

}  // namespace fbjet
