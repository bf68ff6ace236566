#pragma once

// The wet/dry interface of a converged field and the local diagnostics read
// off it. Probes work with phi = Q - psi, which vanishes on the dry side.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fbjet/numerics.hpp"
#include "fbjet/solver.hpp"

namespace fbjet {

/// A column whose wet nodes do not form one block starting at the bottom.
class ExtractionError : public DomainError {
 public:
  ExtractionError(int column, const std::string& what)
      : DomainError(what), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Interface height per grid column of the penalized region.
struct FreeBoundaryCurve {
  std::vector<double> x, k, grad_mag;
  std::vector<int> column;    // grid column of each sample
  std::vector<int> last_wet;  // row of the topmost wet node
  std::vector<std::uint8_t> truncated;
  int skipped_gradients = 0;

  std::size_t size() const { return x.size(); }
};

/// k = y_w + (Q - psi(y_w)) / max(lambda_est, lambda_floor), y_w the topmost
/// wet node and lambda_est the one-sided slope below it. With the free
/// boundary speed as floor, k moves continuously with lambda while the wet
/// set is pinned to the lattice. Columns without penalized nodes are left
/// out; grad_mag is NaN where boundary_gradient skipped the column.
FreeBoundaryCurve extract_curve(const StreamField& field, double lambda_floor);

struct GradientSamples {
  std::vector<double> x, value;
  int skipped = 0;
};

/// |grad psi| by central differences at the wet node one cell below the
/// topmost wet node. Columns with a non-interior node within two cells of
/// the interface are skipped.
GradientSamples boundary_gradient(const StreamField& field,
                                  const FreeBoundaryCurve& curve);

/// Subgrid crossing points on every wet-dry grid edge, for interfaces that
/// are not graphs over x.
std::vector<std::array<double, 2>> interface_points(const StreamField& field,
                                                    double lambda);

/// Unit normal (-k', 1) / |.| at sample n, k' by centered differences.
std::array<double, 2> curve_normal(const FreeBoundaryCurve& curve, std::size_t n);

struct FlatnessReport {
  std::array<double, 2> center{}, nu{};
  double rho = 0.0;
  double sigma_plus = 0.0, sigma_minus = 0.0, delta = 0.0;
};

/// Flatness of phi in B_rho(X0) with nu pointing into the dry side. Sigmas
/// are floored at h / rho and capped at 1.
FlatnessReport flatness_measure(const StreamField& field, double lambda,
                                std::array<double, 2> center, double rho,
                                std::array<double, 2> nu);

struct NondegeneracyResult {
  double mean = 0.0;  // (1/r) times the circle average of phi
  bool small = false, inner_dry = false;
  bool large = false, ball_wet = false;
  bool pass = false;
};

struct NondegeneracyConstants {
  double c_star = 0.1;
  double C_star = 1.0;
  double kappa = 0.5;
};

/// Checks m <= c* lambda => phi = 0 in B_{kappa r} and m >= C* lambda =>
/// phi > 0 in B_r.
NondegeneracyResult nondegeneracy_probe(const StreamField& field, double lambda,
                                        std::array<double, 2> center, double r,
                                        const NondegeneracyConstants& constants = {});

/// Fraction of nodes in B_r(X0) that are wet.
double density_ratio(const StreamField& field, std::array<double, 2> center,
                     double r);

/// Flux of grad phi out of B_r(X0) minus the node sum of h^2 f(psi) over
/// wet nodes, i.e. the mass the free boundary carries inside the ball.
double ball_measure(const StreamField& field, const VorticityTables& tables,
                    std::array<double, 2> center, double r);

struct BlowupResult {
  double nu_angle = 0.0;  // direction of the fitted half plane
  double deviation = 0.0; // sup |phi_r - lambda max(-Z.nu, 0)|
  std::vector<std::array<double, 2>> z;
  std::vector<double> phi;
};

/// phi_r(Z) = phi(X0 + r Z) / r on the unit ball, fitted by the half plane
/// of slope lambda whose normal minimizes the squared residual.
BlowupResult blowup_rescale(const StreamField& field, double lambda,
                            std::array<double, 2> center, double r);

/// phi at an arbitrary point by bilinear interpolation.
double phi_at(const StreamField& field, double x, double y);

/// Smallest C with |k_i - k_j| <= C |x_i - x_j| + 2h over samples with x in
/// [x_lo, x_hi].
double lipschitz_constant(const FreeBoundaryCurve& curve, double h, double x_lo,
                          double x_hi);

/// Median of ||grad psi| - lambda| / lambda over samples with x in
/// [x_lo, x_hi]; NaN if none.
double bernoulli_median(const GradientSamples& samples, double lambda,
                        double x_lo, double x_hi);

/// Column text: x k grad.
void write_curve(std::ostream& out, const FreeBoundaryCurve& curve);

}  // namespace fbjet
