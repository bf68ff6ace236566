#pragma once

// One-dimensional hydrodynamic objects derived from the inlet velocity:
// streamline map, vorticity strength and its extension, the downstream
// state for a given free-boundary speed, and the Dirichlet stream profiles.

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "fbjet/numerics.hpp"

namespace fbjet {

/// Inlet velocity u0 on [0, H]. Construction validates u0 > 0, u0'(0) = 0
/// and u0'' >= 0 (on the interpolant for tabulated input).
class UpstreamProfile {
 public:
  struct Constant {
    double speed;
  };
  /// u0(y) = base + curvature * y^2
  struct QuadraticShear {
    double base;
    double curvature;
  };
  struct Tabulated {
    CubicHermite spline;
  };

  static UpstreamProfile constant(double height, double speed);
  static UpstreamProfile quadratic_shear(double height, double base,
                                         double curvature);
  /// Samples must start at y = 0 and end at y = H.
  static UpstreamProfile tabulated(std::vector<double> y,
                                   std::vector<double> u);

  double height() const { return height_; }
  double flux() const { return flux_; }
  double lambda0() const { return u0(height_); }

  double u0(double y) const;
  double u0_prime(double y) const;
  double u0_second(double y) const;

  /// ∫₀^y u0, by quadrature.
  double cumulative_flux(double y) const;

  const std::variant<Constant, QuadraticShear, Tabulated>& shape() const {
    return shape_;
  }

 private:
  UpstreamProfile(double height,
                  std::variant<Constant, QuadraticShear, Tabulated> shape);
  void validate() const;

  double height_;
  std::variant<Constant, QuadraticShear, Tabulated> shape_;
  double flux_ = 0.0;
};

/// Q = ∫₀^H u0.
double mass_flux(const UpstreamProfile& profile, double abs_tol = 1e-10);

/// Streamline map: kappa(t) is the inlet height of the streamline carrying
/// cumulative flux t, i.e. the root of ∫₀^kappa u0 = t.
class StreamlineMap {
 public:
  explicit StreamlineMap(std::shared_ptr<const UpstreamProfile> profile);

  double operator()(double t) const;
  double flux() const { return profile_->flux(); }

 private:
  std::shared_ptr<const UpstreamProfile> profile_;
};

StreamlineMap build_kappa(std::shared_ptr<const UpstreamProfile> profile);

/// f0(t) = -u0'(kappa(t)) on [0, Q], its C¹ extension to the whole line and
/// the convex primitive F0(t) = 2∫_t^Q f̃0.
class VorticityModel {
 public:
  explicit VorticityModel(std::shared_ptr<const UpstreamProfile> profile);

  double flux() const { return q_; }
  double kappa(double t) const { return kappa_(t); }

  double f0(double t) const;
  double f0_prime(double t) const;

  double f0_ext(double t) const;
  double f0_ext_prime(double t) const;

  double F0(double t) const;

  /// Upper bound on |f̃0| and |f̃0'| (sampled).
  double lambda_bound() const { return lambda_bound_; }

  /// End data used by the extension.
  double f0_at_Q() const { return fQ_; }
  double f0_prime_at_Q() const { return dfQ_; }
  double f0_prime_at_0() const { return df0_; }

  const UpstreamProfile& profile() const { return *profile_; }
  std::shared_ptr<const UpstreamProfile> profile_ptr() const {
    return profile_;
  }

 private:
  std::shared_ptr<const UpstreamProfile> profile_;
  StreamlineMap kappa_;
  double q_;
  double fQ_, dfQ_, df0_;
  double lambda_bound_ = 0.0;
};

/// The piecewise extension of f0 outside [0, Q], given its end data.
double extend_strength(double t, double q, double f0_inside, double f0_at_Q,
                       double f0_prime_at_Q, double f0_prime_at_0);
double extend_strength_prime(double t, double q, double f0_prime_inside,
                             double f0_prime_at_Q, double f0_prime_at_0);

/// Fast tables of f̃0, f̃0' and F0 for the nodal solver.
class VorticityTables {
 public:
  VorticityTables() = default;
  explicit VorticityTables(const VorticityModel& model,
                           std::size_t samples_per_flux = 2048);
  /// Identically zero vorticity on a flux Q.
  static VorticityTables zero(double q);

  bool is_zero() const { return zero_; }
  double flux() const { return q_; }

  double f(double t) const { return zero_ ? 0.0 : f_.value(t); }
  double f_prime(double t) const { return zero_ ? 0.0 : f_.derivative(t); }
  double F(double t) const { return zero_ ? 0.0 : F_.value(t); }

 private:
  double q_ = 0.0;
  bool zero_ = true;
  UniformHermite f_, F_;
};

double primitive_F0(const VorticityModel& model, double t);

/// Streamline map into the downstream jet, χ(s; p_diff).
double chi(const UpstreamProfile& profile, double s, double p_diff);
double chi_inverse(const UpstreamProfile& profile, double t, double p_diff);

/// Downstream state for a given free-boundary speed lambda >= lambda0.
class DownstreamState {
 public:
  DownstreamState(std::shared_ptr<const UpstreamProfile> profile,
                  double lambda, double p_atm = 0.0);

  double lambda() const { return lambda_; }
  double p_diff() const { return p_diff_; }
  double p_atm() const { return p_atm_; }
  double p_in() const { return p_atm_ + p_diff_; }
  /// Asymptotic jet height χ(H; p_diff).
  double height() const { return h_; }

  double chi(double s) const;
  double chi_inverse(double t) const;
  /// u1(t) for t in [0, h].
  double velocity(double t) const;
  /// Ψ_λ(y) = ∫₀^y u1, clamped at Q for y >= h.
  double stream(double y) const;

  const UpstreamProfile& profile() const { return *profile_; }

 private:
  std::shared_ptr<const UpstreamProfile> profile_;
  double lambda_, p_diff_, p_atm_, h_;
};

double downstream_velocity(const DownstreamState& state, double t);
double asymptotic_height(double lambda, const UpstreamProfile& profile);

/// Ψ₋L on [0, b]: Ψ'' = -f̃0(Ψ), Ψ(0) = 0, Ψ(b) = Q.
class InletProfile {
 public:
  InletProfile(double L, double b, double q, CubicHermite solution,
               double initial_slope, double endpoint_residual);

  double L() const { return L_; }
  double top() const { return b_; }
  double operator()(double y) const;
  double derivative(double y) const;
  double initial_slope() const { return slope_; }
  double endpoint_residual() const { return residual_; }

 private:
  double L_, b_, q_;
  CubicHermite solution_;
  double slope_, residual_;
};

/// Solves the inlet two-point problem by shooting on Ψ'(0). top = g(-L).
InletProfile inlet_stream(double L, double top, double q,
                          const std::function<double(double)>& f0_ext);
/// Same, with f̃0 taken from tables built on the model.
InletProfile inlet_stream(double L, double top, const VorticityModel& model);

}  // namespace fbjet
