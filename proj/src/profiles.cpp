#include "fbjet/profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace fbjet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kRangeSlack = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// UpstreamProfile

UpstreamProfile::UpstreamProfile(
    double height, std::variant<Constant, QuadraticShear, Tabulated> shape)
    : height_(height), shape_(std::move(shape)) {
  if (!(height_ > 0.0) || !std::isfinite(height_))
    throw InvalidInput("upstream profile: height must be positive");
  validate();
  flux_ = mass_flux(*this);
}

UpstreamProfile UpstreamProfile::constant(double height, double speed) {
  return UpstreamProfile(height, Constant{speed});
}

UpstreamProfile UpstreamProfile::quadratic_shear(double height, double base,
                                                 double curvature) {
  return UpstreamProfile(height, QuadraticShear{base, curvature});
}

UpstreamProfile UpstreamProfile::tabulated(std::vector<double> y,
                                           std::vector<double> u) {
  if (y.size() < 2 || y.size() != u.size())
    throw InvalidInput("tabulated profile: need >= 2 (y, u) samples");
  if (std::abs(y.front()) > 0.0)
    throw InvalidInput("tabulated profile: first sample must be at y = 0");
  for (double v : u)
    if (!(v > 0.0))
      throw InvalidInput("tabulated profile: non-positive velocity sample");
  double height = y.back();
  auto slopes = monotone_slopes(y, u, 0.0);
  return UpstreamProfile(height,
                         Tabulated{CubicHermite(std::move(y), std::move(u),
                                                std::move(slopes))});
}

double UpstreamProfile::u0(double y) const {
  return std::visit(
      overloaded{[](const Constant& c) { return c.speed; },
                 [y](const QuadraticShear& q) {
                   return q.base + q.curvature * y * y;
                 },
                 [y](const Tabulated& t) { return t.spline.value(y); }},
      shape_);
}

double UpstreamProfile::u0_prime(double y) const {
  return std::visit(
      overloaded{[](const Constant&) { return 0.0; },
                 [y](const QuadraticShear& q) { return 2.0 * q.curvature * y; },
                 [y](const Tabulated& t) { return t.spline.derivative(y); }},
      shape_);
}

double UpstreamProfile::u0_second(double y) const {
  return std::visit(
      overloaded{[](const Constant&) { return 0.0; },
                 [](const QuadraticShear& q) { return 2.0 * q.curvature; },
                 [y](const Tabulated& t) {
                   return t.spline.second_derivative(y);
                 }},
      shape_);
}

double UpstreamProfile::cumulative_flux(double y) const {
  if (y < -kRangeSlack * height_ || y > height_ * (1 + kRangeSlack))
    throw DomainError("cumulative_flux: height outside [0, H]");
  y = std::clamp(y, 0.0, height_);
  return integrate([this](double s) { return u0(s); }, 0.0, y, 1e-12);
}

void UpstreamProfile::validate() const {
  constexpr int kSamples = 2000;
  for (int k = 0; k <= kSamples; ++k) {
    double y = height_ * k / kSamples;
    double u = u0(y);
    if (!(u > 0.0) || !std::isfinite(u)) {
      std::ostringstream msg;
      msg << "upstream profile: u0(" << y << ") = " << u << " is not positive";
      throw InvalidInput(msg.str());
    }
  }
  if (std::abs(u0_prime(0.0)) > 1e-10)
    throw InvalidInput("upstream profile: u0'(0) must vanish");
  // u0'' >= 0. For tabulated input the interpolant's second derivative is
  // linear on each segment, so the segment ends decide.
  std::vector<double> probes;
  if (auto* t = std::get_if<Tabulated>(&shape_)) {
    auto x = t->spline.knots();
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      double d = x[k + 1] - x[k];
      probes.push_back(x[k] + 1e-9 * d);
      probes.push_back(x[k + 1] - 1e-9 * d);
    }
  } else {
    for (int k = 0; k <= kSamples; ++k) probes.push_back(height_ * k / kSamples);
  }
  for (double y : probes) {
    if (u0_second(y) < -1e-10) {
      std::ostringstream msg;
      msg << "upstream profile: u0''(" << y << ") = " << u0_second(y)
          << " is negative";
      throw InvalidInput(msg.str());
    }
  }
}

double mass_flux(const UpstreamProfile& profile, double abs_tol) {
  const double H = profile.height();
  for (int k = 0; k <= 64; ++k)
    if (!(profile.u0(H * k / 64.0) > 0.0))
      throw InvalidInput("mass_flux: non-positive velocity sample");
  // Tighter than requested so that callers feeding root finders stay clean.
  double q = integrate([&](double y) { return profile.u0(y); }, 0.0, H,
                       std::min(abs_tol, 1e-12));
  if (!(q > 0.0)) throw InvalidInput("mass_flux: flux must be positive");
  return q;
}

// ---------------------------------------------------------------------------
// Streamline map and vorticity

StreamlineMap::StreamlineMap(std::shared_ptr<const UpstreamProfile> profile)
    : profile_(std::move(profile)) {}

double StreamlineMap::operator()(double t) const {
  const double q = profile_->flux();
  if (t < -kRangeSlack * q || t > q * (1 + kRangeSlack)) {
    std::ostringstream msg;
    msg << "kappa: flux value " << t << " outside [0, " << q << "]";
    throw DomainError(msg.str());
  }
  if (t <= 0.0) return 0.0;
  if (t >= q) return profile_->height();
  const auto& p = *profile_;
  if (auto* c = std::get_if<UpstreamProfile::Constant>(&p.shape()))
    return t / c->speed;
  return monotone_root([&](double y) { return p.cumulative_flux(y) - t; },
                       [&](double y) { return p.u0(y); }, 0.0, p.height(),
                       1e-15, 1e-13 * q);
}

StreamlineMap build_kappa(std::shared_ptr<const UpstreamProfile> profile) {
  return StreamlineMap(std::move(profile));
}

double extend_strength(double t, double q, double f0_inside, double f0_at_Q,
                       double f0_prime_at_Q, double f0_prime_at_0) {
  if (t >= q + 1.0) return f0_at_Q + f0_prime_at_Q / 2.0;
  if (t >= q) {
    double s = t - q;
    return f0_at_Q + f0_prime_at_Q * (s - s * s / 2.0);
  }
  if (t >= 0.0) return f0_inside;
  if (t >= -1.0) return f0_prime_at_0 * (t + t * t / 2.0);
  return -f0_prime_at_0 / 2.0;
}

double extend_strength_prime(double t, double q, double f0_prime_inside,
                             double f0_prime_at_Q, double f0_prime_at_0) {
  if (t >= q + 1.0) return 0.0;
  if (t >= q) return f0_prime_at_Q * (1.0 - (t - q));
  if (t >= 0.0) return f0_prime_inside;
  if (t >= -1.0) return f0_prime_at_0 * (1.0 + t);
  return 0.0;
}

VorticityModel::VorticityModel(std::shared_ptr<const UpstreamProfile> profile)
    : profile_(std::move(profile)), kappa_(profile_), q_(profile_->flux()) {
  const auto& p = *profile_;
  const double H = p.height();
  fQ_ = -p.u0_prime(H);
  dfQ_ = -p.u0_second(H) / p.u0(H);
  df0_ = -p.u0_second(0.0) / p.u0(0.0);
  constexpr int kSamples = 400;
  for (int k = 0; k <= kSamples; ++k) {
    double t = -1.5 + (q_ + 3.0) * k / kSamples;
    lambda_bound_ = std::max(
        {lambda_bound_, std::abs(f0_ext(t)), std::abs(f0_ext_prime(t))});
  }
}

double VorticityModel::f0(double t) const {
  return -profile_->u0_prime(kappa_(t));
}

double VorticityModel::f0_prime(double t) const {
  double y = kappa_(t);
  return -profile_->u0_second(y) / profile_->u0(y);
}

double VorticityModel::f0_ext(double t) const {
  double inside = (t >= 0.0 && t < q_) ? f0(t) : 0.0;
  return extend_strength(t, q_, inside, fQ_, dfQ_, df0_);
}

double VorticityModel::f0_ext_prime(double t) const {
  double inside = (t >= 0.0 && t < q_) ? f0_prime(t) : 0.0;
  return extend_strength_prime(t, q_, inside, dfQ_, df0_);
}

double VorticityModel::F0(double t) const { return primitive_F0(*this, t); }

double primitive_F0(const VorticityModel& model, double t) {
  const double q = model.flux();
  if (t == q) return 0.0;
  auto f = [&](double s) { return model.f0_ext(s); };
  // Integrate piece by piece so every panel sees a smooth integrand.
  const std::array<double, 4> breaks{-1.0, 0.0, q, q + 1.0};
  double lo = std::min(t, q), hi = std::max(t, q);
  double total = 0.0, a = lo;
  for (double b : breaks) {
    if (b > a && b < hi) {
      total += integrate(f, a, b, 1e-12);
      a = b;
    }
  }
  total += integrate(f, a, hi, 1e-12);
  return 2.0 * (t < q ? total : -total);
}

VorticityTables::VorticityTables(const VorticityModel& model,
                                 std::size_t samples_per_flux)
    : q_(model.flux()) {
  const double dt = q_ / static_cast<double>(samples_per_flux);
  const auto pad = static_cast<long>(std::ceil(1.5 / dt));
  const long first = -pad;
  const long last = static_cast<long>(samples_per_flux) + pad;
  const std::size_t n = static_cast<std::size_t>(last - first + 1);
  std::vector<double> f(n), df(n);
  double max_abs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double t = static_cast<double>(first + static_cast<long>(k)) * dt;
    if (first + static_cast<long>(k) == static_cast<long>(samples_per_flux))
      t = q_;
    f[k] = model.f0_ext(t);
    df[k] = model.f0_ext_prime(t);
    max_abs = std::max({max_abs, std::abs(f[k]), std::abs(df[k])});
  }
  zero_ = (max_abs == 0.0);
  if (zero_) return;
  f_ = UniformHermite(static_cast<double>(first) * dt, dt, f, df);
  // F0 = 2∫_t^Q f̃0, integrated exactly on the Hermite cubic of f̃0 so that
  // F0' = -2 f̃0 holds at every knot.
  std::vector<double> F(n, 0.0), dF(n);
  const std::size_t iq = static_cast<std::size_t>(-first) + samples_per_flux;
  for (std::size_t k = iq; k > 0; --k) {
    double cell = dt / 2.0 * (f[k - 1] + f[k]) + dt * dt / 12.0 * (df[k - 1] - df[k]);
    F[k - 1] = F[k] + 2.0 * cell;
  }
  for (std::size_t k = iq; k + 1 < n; ++k) {
    double cell = dt / 2.0 * (f[k] + f[k + 1]) + dt * dt / 12.0 * (df[k] - df[k + 1]);
    F[k + 1] = F[k] - 2.0 * cell;
  }
  for (std::size_t k = 0; k < n; ++k) dF[k] = -2.0 * f[k];
  F_ = UniformHermite(static_cast<double>(first) * dt, dt, std::move(F),
                      std::move(dF));
}

VorticityTables VorticityTables::zero(double q) {
  VorticityTables t;
  t.q_ = q;
  t.zero_ = true;
  return t;
}

// ---------------------------------------------------------------------------
// Downstream map

double chi(const UpstreamProfile& profile, double s, double p_diff) {
  if (p_diff < 0.0) throw DomainError("chi: p_diff must be non-negative");
  const double H = profile.height();
  if (s < -kRangeSlack * H || s > H * (1 + kRangeSlack))
    throw DomainError("chi: height outside [0, H]");
  s = std::clamp(s, 0.0, H);
  return integrate(
      [&](double t) {
        double u = profile.u0(t);
        return u / std::sqrt(u * u + 2.0 * p_diff);
      },
      0.0, s, 1e-12);
}

double chi_inverse(const UpstreamProfile& profile, double t, double p_diff) {
  if (p_diff < 0.0) throw DomainError("chi_inverse: p_diff must be non-negative");
  const double H = profile.height();
  const double top = chi(profile, H, p_diff);
  if (t < -kRangeSlack * top || t > top * (1 + kRangeSlack)) {
    std::ostringstream msg;
    msg << "chi_inverse: " << t << " outside [0, " << top << "]";
    throw DomainError(msg.str());
  }
  if (t <= 0.0) return 0.0;
  if (t >= top) return H;
  return monotone_root(
      [&](double s) { return chi(profile, s, p_diff) - t; },
      [&](double s) {
        double u = profile.u0(s);
        return u / std::sqrt(u * u + 2.0 * p_diff);
      },
      0.0, H, 1e-15, 1e-13);
}

DownstreamState::DownstreamState(std::shared_ptr<const UpstreamProfile> profile,
                                 double lambda, double p_atm)
    : profile_(std::move(profile)), lambda_(lambda), p_atm_(p_atm) {
  const double lambda0 = profile_->lambda0();
  if (!(lambda >= lambda0 * (1.0 - 1e-14))) {
    std::ostringstream msg;
    msg << "downstream state: lambda = " << lambda << " is below lambda0 = "
        << lambda0;
    throw DomainError(msg.str());
  }
  p_diff_ = std::max(0.0, (lambda * lambda - lambda0 * lambda0) / 2.0);
  h_ = fbjet::chi(*profile_, profile_->height(), p_diff_);
}

double DownstreamState::chi(double s) const {
  return fbjet::chi(*profile_, s, p_diff_);
}

double DownstreamState::chi_inverse(double t) const {
  return fbjet::chi_inverse(*profile_, t, p_diff_);
}

double DownstreamState::velocity(double t) const {
  if (t < -kRangeSlack * h_ || t > h_ * (1 + kRangeSlack))
    throw DomainError("downstream velocity: height outside [0, h]");
  if (t >= h_) return lambda_;
  double u = profile_->u0(chi_inverse(t));
  return std::sqrt(u * u + 2.0 * p_diff_);
}

double DownstreamState::stream(double y) const {
  if (y <= 0.0) return 0.0;
  if (y >= h_) return profile_->flux();
  return integrate([this](double t) { return velocity(t); }, 0.0, y, 1e-11);
}

double downstream_velocity(const DownstreamState& state, double t) {
  return state.velocity(t);
}

double asymptotic_height(double lambda, const UpstreamProfile& profile) {
  const double lambda0 = profile.lambda0();
  if (!(lambda >= lambda0 * (1.0 - 1e-14)))
    throw DomainError("asymptotic_height: lambda below lambda0");
  double p_diff = std::max(0.0, (lambda * lambda - lambda0 * lambda0) / 2.0);
  return chi(profile, profile.height(), p_diff);
}

// ---------------------------------------------------------------------------
// Inlet profile

InletProfile::InletProfile(double L, double b, double q, CubicHermite solution,
                           double initial_slope, double endpoint_residual)
    : L_(L), b_(b), q_(q), solution_(std::move(solution)),
      slope_(initial_slope), residual_(endpoint_residual) {}

double InletProfile::operator()(double y) const {
  if (y <= 0.0) return 0.0;
  if (y >= b_) return q_;
  return std::clamp(solution_.value(y), 0.0, q_);
}

double InletProfile::derivative(double y) const {
  return solution_.derivative(std::clamp(y, 0.0, b_));
}

namespace {

using InletState = std::array<double, 2>;

struct ShotResult {
  std::vector<double> y, psi, dpsi;
};

ShotResult shoot(double slope, double top, std::size_t steps,
                 const std::function<double(double)>& f0_ext, bool keep) {
  namespace odeint = boost::numeric::odeint;
  ShotResult out;
  auto rhs = [&](const InletState& s, InletState& ds, double) {
    ds[0] = s[1];
    ds[1] = -f0_ext(s[0]);
  };
  InletState state{0.0, slope};
  const double dy = top / static_cast<double>(steps);
  odeint::runge_kutta4<InletState> stepper;
  if (keep) {
    out.y.reserve(steps + 1);
    out.psi.reserve(steps + 1);
    out.dpsi.reserve(steps + 1);
  }
  auto record = [&](double y) {
    if (keep || y == top) {
      out.y.push_back(y);
      out.psi.push_back(state[0]);
      out.dpsi.push_back(state[1]);
    }
  };
  record(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    stepper.do_step(rhs, state, dy * static_cast<double>(k), dy);
    double y = (k + 1 == steps) ? top : dy * static_cast<double>(k + 1);
    if (keep || k + 1 == steps) {
      out.y.push_back(y);
      out.psi.push_back(state[0]);
      out.dpsi.push_back(state[1]);
    }
  }
  return out;
}

}  // namespace

InletProfile inlet_stream(double L, double top, double q,
                          const std::function<double(double)>& f0_ext) {
  if (!(top > 0.0) || !(q > 0.0))
    throw ConfigError("inlet_stream: inlet height and flux must be positive");
  constexpr std::size_t kSteps = 4096;
  auto endpoint = [&](double slope) {
    return shoot(slope, top, kSteps, f0_ext, false).psi.back() - q;
  };
  double lo = 0.0, hi = q / top;
  double r_lo = endpoint(lo);
  double r_hi = endpoint(hi);
  int expansions = 0;
  while (r_hi < 0.0 && expansions < 60) {
    lo = hi;
    r_lo = r_hi;
    hi *= 2.0;
    r_hi = endpoint(hi);
    ++expansions;
  }
  if (r_lo > 0.0 || r_hi < 0.0) {
    std::ostringstream msg;
    msg << "inlet_stream: no shooting bracket for g(-L) = " << top
        << ", Q = " << q << " (f0_ext(0) = " << f0_ext(0.0)
        << ", f0_ext(Q) = " << f0_ext(q) << ")";
    throw ConfigError(msg.str());
  }
  double slope = lo;
  if (r_lo != 0.0) {
    boost::uintmax_t iters = 200;
    auto bracket = boost::math::tools::toms748_solve(
        endpoint, lo, hi, r_lo, r_hi,
        boost::math::tools::eps_tolerance<double>(52), iters);
    double a = bracket.first, b = bracket.second;
    slope = std::abs(endpoint(a)) <= std::abs(endpoint(b)) ? a : b;
  }
  ShotResult shot = shoot(slope, top, kSteps, f0_ext, true);
  double residual = shot.psi.back() - q;
  if (std::abs(residual) > 1e-9 * q) {
    std::ostringstream msg;
    msg << "inlet_stream: endpoint residual " << residual << " too large";
    throw ConfigError(msg.str());
  }
  // Pin the endpoint so Ψ(g(-L)) = Q exactly.
  shot.psi.back() = q;
  for (std::size_t k = 1; k + 1 < shot.psi.size(); ++k) {
    if (!(shot.psi[k] > 0.0 && shot.psi[k] < q) || shot.dpsi[k] < -1e-12) {
      std::ostringstream msg;
      msg << "inlet_stream: profile leaves (0, Q) or decreases at y = "
          << shot.y[k];
      throw ConfigError(msg.str());
    }
  }
  return InletProfile(L, top, q,
                      CubicHermite(std::move(shot.y), std::move(shot.psi),
                                   std::move(shot.dpsi)),
                      slope, residual);
}

InletProfile inlet_stream(double L, double top, const VorticityModel& model) {
  VorticityTables tables(model);
  return inlet_stream(L, top, model.flux(),
                      [&](double t) { return tables.f(t); });
}

}  // namespace fbjet
