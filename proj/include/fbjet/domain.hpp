#pragma once

// Nozzle geometry, the truncated domain and its uniform-grid rasterization.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbjet/profiles.hpp"

namespace fbjet {

/// Wall height y = g(x) for x <= 0 with g(0) = a = min g and g -> H upstream.
class NozzleGeometry {
 public:
  static NozzleGeometry straight(double H);
  /// g(x) = a + (H - a) x^2 / (1 + x^2)
  static NozzleGeometry rational(double a, double H);
  /// g(x) = a + (H - a) tanh^2(x / width)
  static NozzleGeometry converging_tanh(double a, double H, double width);
  /// Polyline through (x_k, g_k), x increasing and ending at 0; constant
  /// g_0 to the left of the first sample.
  static NozzleGeometry polyline(std::vector<double> x, std::vector<double> g);
  static NozzleGeometry custom(std::string name, std::function<double(double)> g,
                               std::function<double(double)> g_prime,
                               double H);

  const std::string& name() const { return name_; }
  double operator()(double x) const { return g_(x); }
  double slope(double x) const { return dg_(x); }
  double a() const { return a_; }
  double H() const { return H_; }
  double H_bar() const { return H_bar_; }
  double g_prime_at_0() const { return dg_(0.0); }

  /// Upstream check |g(-L) - H| <= tol.
  void check_truncation(double L, double tol) const;

 private:
  NozzleGeometry(std::string name, std::function<double(double)> g,
                 std::function<double(double)> dg, double H);

  std::string name_;
  std::function<double(double)> g_, dg_;
  double a_ = 0.0, H_ = 0.0, H_bar_ = 0.0;
};

/// Boundary roles of grid nodes.
enum class BoundaryTag : std::uint8_t {
  None,    // interior
  Bottom,  // T_L, psi = 0
  Wall,    // N_L, psi = Q
  Lip,     // I_{0,L}, psi = Q
  Top,     // l_L, psi = Q
  Inlet,   // sigma_{-L}, psi = Psi_{-L}
  Outlet,  // sigma_L, psi = min(Psi_lambda, Q)
  Side,    // generic Dirichlet data of test grids
};

const char* to_string(BoundaryTag tag);

struct BoundarySegment {
  std::string name;
  BoundaryTag tag;
  std::function<std::array<double, 2>(double)> at;  // parameter in [0, 1]
  double length;
};

struct TruncatedDomain {
  double L = 0.0;
  const NozzleGeometry* geometry = nullptr;
  std::vector<BoundarySegment> segments;

  const BoundarySegment& segment(const std::string& name) const;
};

/// Requires L > H_bar.
TruncatedDomain build_domain(const NozzleGeometry& geometry, double L,
                             double upstream_tol = 0.05);

enum class NodeClass : std::uint8_t { Interior, Dirichlet, Exterior };

/// Uniform node lattice x = x0 + i h, y = y0 + j h, i in [0, nx], j in [0, ny].
struct Grid {
  double h = 0.0, x0 = 0.0, y0 = 0.0, q = 0.0;
  int nx = 0, ny = 0;
  /// Typical height of the flow region, used for the relaxation factor.
  double length_scale = 1.0;
  std::vector<NodeClass> cls;
  std::vector<BoundaryTag> tag;
  std::vector<double> value;  // Dirichlet data; unused at interior nodes
  std::vector<std::uint8_t> penalized;
  std::vector<std::uint32_t> lex, red, black;  // interior node lists

  int stride() const { return nx + 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx + 1) +
           static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % (nx + 1)); }
  int row(std::size_t k) const { return static_cast<int>(k / (nx + 1)); }
  double x(int i) const { return x0 + h * i; }
  double y(int j) const { return y0 + h * j; }
  bool interior(std::size_t k) const { return cls[k] == NodeClass::Interior; }

  /// Marks Dirichlet nodes without interior neighbours as exterior and
  /// builds the traversal lists.
  void finalize();
};

/// Rasterized Omega_L. Dirichlet values other than 0 and Q are filled by
/// assemble_dirichlet.
Grid rasterize(const TruncatedDomain& domain, double h_grid);

/// Sets psi = Psi_{-L} on sigma_{-L} and min(Psi_lambda, Q) on sigma_L.
void assemble_dirichlet(Grid& grid, const DownstreamState& downstream,
                        const InletProfile& inlet);

/// Rectangle [0, width] x [0, height]: psi = 0 below, Q on top and
/// side(y) on both vertical sides. Every interior node carries the penalty.
Grid rectangle_grid(double width, double height, double h, double q,
                    const std::function<double(double)>& side);

/// Disk of the given radius centred at the origin. Nodes outside the circle
/// adjacent to the interior carry value(x, y). Every interior node carries
/// the penalty.
Grid disk_grid(double radius, double h, double q,
               const std::function<double(double, double)>& value);

/// Column text: x y class value.
void write_grid(std::ostream& out, const Grid& grid);

}  // namespace fbjet
