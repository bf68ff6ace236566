#include "fbjet/jetfit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace fbjet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool present(const Grid& g, int i, int j) {
  return i >= 0 && j >= 0 && i <= g.nx && j <= g.ny &&
         g.cls[g.index(i, j)] != NodeClass::Exterior;
}

bool clear_of_walls(const Grid& g, int i, int j) {
  for (int dj = -2; dj <= 2; ++dj)
    for (int di = -2; di <= 2; ++di)
      if (!present(g, i + di, j + dj) || !g.interior(g.index(i + di, j + dj))) return false;
  return true;
}

/// Central difference of psi along (di, dj), one-sided next to exterior nodes.
double derivative(const StreamField& f, int i, int j, int di, int dj) {
  const Grid& g = *f.grid;
  const bool fwd = present(g, i + di, j + dj), bwd = present(g, i - di, j - dj);
  const double mid = f.psi[g.index(i, j)];
  if (fwd && bwd)
    return (f.psi[g.index(i + di, j + dj)] - f.psi[g.index(i - di, j - dj)]) / (2 * g.h);
  if (fwd) return (f.psi[g.index(i + di, j + dj)] - mid) / g.h;
  if (bwd) return (mid - f.psi[g.index(i - di, j - dj)]) / g.h;
  return 0.0;
}

/// Least-squares line through (x, y); returns {value at 0, slope}.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - slope * sx) / n, slope};
}

/// First m untruncated curve samples with x > 0.
void leading_samples(const FreeBoundaryCurve& curve, int m, std::vector<double>& x,
                     std::vector<double>& k) {
  x.clear();
  k.clear();
  for (std::size_t n = 0; n < curve.size() && static_cast<int>(x.size()) < m; ++n) {
    if (curve.x[n] <= 0.0 || curve.truncated[n] || curve.last_wet[n] < 0) continue;
    x.push_back(curve.x[n]);
    k.push_back(curve.k[n]);
  }
}

double default_tol_field(const SolverConfig& solver, double q) {
  return solver.tol_field > 0.0 ? solver.tol_field : 1e-8 * q;
}

}  // namespace

// ---------------------------------------------------------------------------
// JetCase

JetCase::JetCase(NozzleGeometry geometry, std::shared_ptr<const UpstreamProfile> profile,
                 double L, double p_atm)
    : geometry_(std::move(geometry)),
      profile_(std::move(profile)),
      L_(L),
      p_atm_(p_atm),
      model_(profile_),
      tables_(model_),
      domain_(build_domain(geometry_, L)),
      inlet_(inlet_stream(L, geometry_(-L), model_)) {
  if (std::abs(geometry_.H() - profile_->height()) > 1e-12 * geometry_.H()) {
    std::ostringstream msg;
    msg << "upstream height " << geometry_.H() << " of nozzle '" << geometry_.name()
        << "' differs from the profile height " << profile_->height();
    throw InvalidInput(msg.str());
  }
}

Grid JetCase::grid(double lambda, double h) const {
  Grid g = rasterize(domain_, h);
  DownstreamState downstream(profile_, lambda, p_atm_);
  assemble_dirichlet(g, downstream, inlet_);
  return g;
}

// ---------------------------------------------------------------------------
// Detachment height

double extrapolate_detachment(const FreeBoundaryCurve& curve, int m) {
  std::vector<double> x, k;
  leading_samples(curve, std::max(m, 1), x, k);
  if (x.empty()) return kNaN;
  if (x.size() == 1) return k[0];
  return line_fit(x, k).first;
}

JetState detachment_height(const JetCase& jet, double lambda, double h,
                           const SolverConfig& solver, const SolveOptions& options,
                           const JetState* warm) {
  if (!(lambda >= jet.lambda0() * (1 - 1e-12))) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " is below lambda0 = " << jet.lambda0();
    throw InvalidInput(msg.str());
  }
  const auto start = std::chrono::steady_clock::now();
  const DownstreamState downstream(jet.profile_ptr(), lambda, jet.p_atm());
  auto solve = [&](const std::shared_ptr<const Grid>& grid, StreamField init) {
    Problem problem{grid.get(), &jet.tables(), lambda};
    SolveReport report;
    StreamField field = minimize(problem, solver, std::move(init), &report);
    if (!report.converged) {
      std::ostringstream msg;
      msg << "solver did not converge at lambda = " << lambda << ", h = " << grid->h
          << " after " << report.sweeps << " sweeps";
      throw NonConvergence(msg.str(), report);
    }
    return std::pair{std::move(field), std::move(report)};
  };
  auto fresh = [&](const Grid& g) {
    return options.init == Initialization::Dry
               ? dry_field(g)
               : initial_field(g, [&](double y) { return downstream.stream(y); });
  };

  JetState state;
  state.lambda = lambda;
  state.h = h;
  auto fine = std::make_shared<const Grid>(jet.grid(lambda, h));
  StreamField init;
  if (warm && warm->h == h) {
    init.grid = fine.get();
    init.psi = fine->value;
    for (std::uint32_t k : fine->lex) init.psi[k] = warm->field.psi[k];
    init.refresh_wet();
  } else if (warm) {
    init = prolongate(warm->field, *fine);
  } else {
    std::shared_ptr<const Grid> coarse;
    StreamField field;
    for (int level = std::max(options.levels, 1) - 1; level >= 1; --level) {
      auto grid = std::make_shared<const Grid>(jet.grid(lambda, h * (1 << level)));
      StreamField start_field = coarse ? prolongate(field, *grid) : fresh(*grid);
      field = solve(grid, std::move(start_field)).first;
      coarse = grid;
    }
    init = coarse ? prolongate(field, *fine) : fresh(*fine);
  }
  auto [field, report] = solve(fine, std::move(init));
  state.grid = fine;
  state.field = std::move(field);
  state.report = std::move(report);
  state.curve = extract_curve(state.field, lambda);
  state.detachment = extrapolate_detachment(state.curve, options.extrapolation_columns);
  state.wall_time = seconds_since(start);
  return state;
}

// ---------------------------------------------------------------------------
// Fit

FitOutcome fit_lambda(const JetCase& jet, const FitConfig& config, const SolverConfig& solver,
                      std::optional<double> seed) {
  const double lam0 = jet.lambda0(), a = jet.geometry().a();
  const double cap = config.cap_factor * lam0;
  const double margin = 1e-9 * a;
  const int levels = std::max(config.solve.levels, 1);
  if (!(config.tol_lambda > 0.0)) throw InvalidInput("fit: tol_lambda must be positive");

  FitOutcome out;
  out.L = jet.L();
  struct Eval {
    double lambda;
    JetState state;
    bool below;
  };
  std::vector<Eval> previous;  // evaluations of the next coarser level
  double lo = lam0, hi = config.lambda_hi > 0.0 ? config.lambda_hi : 1.5 * lam0;
  double width = 0.0;
  if (seed) {
    width = std::max(0.05 * (*seed - lam0), 20 * config.tol_lambda);
    lo = std::max(lam0, *seed - width);
    hi = std::min(cap, *seed + width);
  }

  SolverConfig search = solver;
  search.polish = false;
  for (int level = levels - 1; level >= 0; --level) {
    const double h = config.grid_h * (1 << level);
    const double tol = config.tol_lambda * std::pow(4.0, level);
    SolveOptions options = config.solve;
    options.levels = 1;
    std::vector<Eval> evals;
    auto nearest = [](const std::vector<Eval>& list, double lambda) -> const JetState* {
      const Eval* best = nullptr;
      for (const Eval& e : list)
        if (!best || std::abs(e.lambda - lambda) < std::abs(best->lambda - lambda)) best = &e;
      return best ? &best->state : nullptr;
    };
    auto evaluate = [&](double lambda) -> bool {
      for (const Eval& e : evals)
        if (e.lambda == lambda) return e.below;
      const double reach = 0.05 * lam0;
      const JetState* warm = nearest(evals, lambda);
      if (warm && std::abs(warm->lambda - lambda) > reach) warm = nullptr;
      if (!warm) warm = nearest(previous, lambda);
      if (warm && std::abs(warm->lambda - lambda) > reach) warm = nullptr;
      SolveOptions fresh = options;
      fresh.levels = levels - level;
      JetState s = detachment_height(jet, lambda, h, search, warm ? options : fresh, warm);
      const bool below = s.detachment < a - margin;
      out.trace.push_back({lambda, s.detachment, h, below});
      evals.push_back({lambda, std::move(s), below});
      return below;
    };

    if (level < levels - 1) {
      const double centre = hi;
      width = std::max({2.0 * width, 0.02 * (centre - lam0), 8 * tol});
      lo = std::max(lam0, centre - width);
      hi = std::min(cap, centre + width);
    }
    // Lower end: the predicate must fail there.
    while (evaluate(lo)) {
      if (lo <= lam0) {
        std::ostringstream msg;
        msg << "k(0) < a already at lambda0 = " << lam0 << " (k(0) = "
            << evals.back().state.detachment << ", a = " << a
            << "): degenerate nozzle geometry";
        throw FitError(msg.str());
      }
      hi = lo;
      width *= 2;
      lo = std::max(lam0, lo - width);
    }
    // Upper end: the predicate must hold; expand by doubling up to the cap.
    while (!evaluate(hi)) {
      lo = hi;
      if (hi >= cap) {
        std::ostringstream msg;
        msg << "k(0) >= a up to the bracket cap lambda = " << cap << "; C0 exceeded";
        throw FitError(msg.str());
      }
      if (level == levels - 1 && !seed) {
        hi = std::min(cap, 2 * hi);
      } else {
        hi = std::min(cap, hi + width);
        width *= 2;
      }
    }
    int steps = 0;
    while (hi - lo > tol && steps++ < config.max_bisections) {
      const double mid = 0.5 * (lo + hi);
      if (evaluate(mid))
        hi = mid;
      else
        lo = mid;
    }

    // k(0) should not rise with lambda by more than two cells.
    std::vector<const Eval*> sorted;
    for (const Eval& e : evals) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const Eval* x, const Eval* y) { return x->lambda < y->lambda; });
    bool monotone = true;
    double lowest = std::numeric_limits<double>::infinity();
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
      if ((*it)->state.detachment > lowest + 2 * h) monotone = false;
      lowest = std::min(lowest, (*it)->state.detachment);
    }
    if (!monotone && level == 0) {
      out.monotone = false;
      out.scanned = true;
      const double scan_lo = sorted.front()->lambda, scan_hi = sorted.back()->lambda;
      constexpr int kScan = 8;
      double first_below = scan_hi, last_above = scan_lo;
      for (int n = 0; n <= kScan; ++n) {
        const double lambda = scan_lo + (scan_hi - scan_lo) * n / kScan;
        if (evaluate(lambda)) {
          first_below = lambda;
          break;
        }
        last_above = lambda;
      }
      lo = last_above;
      hi = first_below;
      steps = 0;
      while (hi - lo > tol && steps++ < config.max_bisections) {
        const double mid = 0.5 * (lo + hi);
        if (evaluate(mid))
          hi = mid;
        else
          lo = mid;
      }
    }
    width = hi - lo;
    previous = std::move(evals);
  }

  for (Eval& e : previous)
    if (e.lambda == hi) out.solution = std::move(e.state);
  out.lambda = hi;
  if (solver.polish) {
    SolveOptions options = config.solve;
    options.levels = 1;
    const double spent = out.solution.wall_time;
    out.solution = detachment_height(jet, hi, config.grid_h, solver, options, &out.solution);
    out.solution.wall_time += spent;
  }
  const double tol_detach = config.tol_detach > 0.0 ? config.tol_detach : config.grid_h;
  out.detach_ok = std::abs(out.solution.detachment - a) <= tol_detach;
  return out;
}

FitResult continuation_in_L(const NozzleGeometry& geometry,
                            std::shared_ptr<const UpstreamProfile> profile,
                            const FitConfig& config, const SolverConfig& solver,
                            double p_atm) {
  FitResult result;
  std::optional<double> seed;
  for (double L : config.L_schedule) {
    ContinuationEntry entry;
    entry.L = L;
    try {
      JetCase jet(geometry, profile, L, p_atm);
      FitOutcome fit = fit_lambda(jet, config, solver, seed);
      seed = fit.lambda;
      entry.fit = std::move(fit);
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    result.entries.push_back(std::move(entry));
  }
  std::vector<std::pair<double, double>> fitted;
  for (const auto& e : result.entries)
    if (e.ok) fitted.push_back({e.L, e.fit->lambda});
  if (!fitted.empty()) {
    auto [lo, hi] = std::minmax_element(fitted.begin(), fitted.end(),
                                        [](auto& x, auto& y) { return x.second < y.second; });
    result.spread = hi->second - lo->second;
    result.extrapolated = fitted.back().second;
    if (fitted.size() >= 2) {
      const auto& [L1, l1] = fitted[fitted.size() - 2];
      const auto& [L2, l2] = fitted.back();
      result.extrapolated = l2 - (l2 - l1) / (1 / L2 - 1 / L1) / L2;
    }
  }
  result.unstable = result.spread > 5 * config.tol_lambda;
  return result;
}

// ---------------------------------------------------------------------------
// Flow reconstruction and checks

FlowFields velocity_pressure_fields(const JetState& state, const JetCase& jet) {
  const Grid& g = *state.grid;
  const StreamField& f = state.field;
  const UpstreamProfile& u0 = jet.profile();
  const DownstreamState downstream(jet.profile_ptr(), state.lambda, jet.p_atm());
  constexpr int kTable = 1024;
  std::vector<double> by(kTable + 1), dby(kTable + 1);
  for (int n = 0; n <= kTable; ++n) {
    const double s = jet.model().kappa(jet.q() * n / kTable);
    by[n] = 0.5 * u0.u0(s) * u0.u0(s);
    dby[n] = u0.u0_prime(s);
  }
  const UniformHermite bernoulli(0.0, jet.q() / kTable, by, dby);
  auto B = [&](double t) {
    return bernoulli.value(std::clamp(t, 0.0, jet.q())) + downstream.p_in();
  };

  FlowFields out;
  out.u.assign(g.size(), kNaN);
  out.v.assign(g.size(), kNaN);
  out.p.assign(g.size(), kNaN);
  out.min_u = std::numeric_limits<double>::infinity();
  for (std::uint32_t k : g.lex) {
    if (!f.wet[k]) continue;
    const int i = g.col(k), j = g.row(k);
    const double u = derivative(f, i, j, 0, 1), v = -derivative(f, i, j, 1, 0);
    out.u[k] = u;
    out.v[k] = v;
    out.p[k] = B(f.psi[k]) - 0.5 * (u * u + v * v);
    if (clear_of_walls(g, i, j)) out.min_u = std::min(out.min_u, u);
  }
  for (std::size_t n = 0; n < state.curve.size(); ++n) {
    if (std::isnan(state.curve.grad_mag[n])) continue;
    const std::size_t k = g.index(state.curve.column[n], state.curve.last_wet[n] - 1);
    if (!std::isnan(out.p[k]))
      out.interface_pressure = std::max(out.interface_pressure, std::abs(out.p[k] - jet.p_atm()));
  }
  return out;
}

AsymptoticsReport asymptotics_report(const JetState& state, const JetCase& jet,
                                     double x_upstream, double x_downstream) {
  const Grid& g = *state.grid;
  const DownstreamState downstream(jet.profile_ptr(), state.lambda, jet.p_atm());
  auto column = [&](double x) {
    const int i = static_cast<int>(std::lround((x - g.x0) / g.h));
    if (i < 0 || i > g.nx) {
      std::ostringstream msg;
      msg << "probe column x = " << x << " is outside the grid";
      throw DomainError(msg.str());
    }
    return i;
  };
  AsymptoticsReport r;
  const int iu = column(x_upstream), id = column(x_downstream);
  r.x_upstream = g.x(iu);
  r.x_downstream = g.x(id);
  for (int j = 0; j <= g.ny; ++j) {
    const std::size_t ku = g.index(iu, j), kd = g.index(id, j);
    if (g.cls[ku] != NodeClass::Exterior)
      r.upstream = std::max(r.upstream, std::abs(state.field.psi[ku] -
                                                 std::min(jet.profile().cumulative_flux(
                                                              std::min(g.y(j), jet.profile().height())),
                                                          jet.q())));
    if (g.cls[kd] != NodeClass::Exterior)
      r.downstream = std::max(r.downstream,
                              std::abs(state.field.psi[kd] - downstream.stream(g.y(j))));
  }
  for (std::size_t n = 0; n < state.curve.size(); ++n)
    if (state.curve.column[n] == id) r.height = std::abs(state.curve.k[n] - downstream.height());
  return r;
}

AsymptoticsReport asymptotics_report(const JetState& state, const JetCase& jet) {
  return asymptotics_report(state, jet, -0.5 * jet.L(), 0.75 * jet.L());
}

SmoothFit smooth_fit_check(const FreeBoundaryCurve& curve, const NozzleGeometry& geometry,
                           int m) {
  SmoothFit r;
  r.g_prime = geometry.g_prime_at_0();
  if (m < 2) {
    r.skipped = true;
    r.reason = "need at least two columns for a slope";
    return r;
  }
  std::vector<double> x, k;
  leading_samples(curve, m + 1, x, k);
  if (static_cast<int>(x.size()) < m + 1) {
    r.skipped = true;
    r.reason = "fewer than m + 1 curve columns";
    return r;
  }
  x.pop_back();
  k.pop_back();
  r.slope = line_fit(x, k).second;
  r.gap = std::abs(r.slope - r.g_prime);
  return r;
}

std::vector<double> discrete_strip_stream(const VorticityTables& tables, double lambda,
                                          double h, int rows) {
  if (!(lambda > 0.0) || !(h > 0.0) || rows < 1)
    throw InvalidInput("discrete_strip_stream: lambda, h and rows must be positive");
  const double q = tables.flux(), h2 = h * h;
  std::vector<double> best(static_cast<std::size_t>(rows) + 1, q), psi, a, b, r;
  best[0] = 0.0;
  double best_energy = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= rows; ++m) {
    // Nodes 1 .. m-1 wet, psi(m) = Q: Newton on the tridiagonal system.
    const std::size_t n = static_cast<std::size_t>(m - 1);
    psi.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 0; j <= m; ++j) psi[j] = q * j / m;
    for (int it = 0; it < 50 && n > 0; ++it) {
      a.assign(n, 0.0);
      r.assign(n, 0.0);
      for (std::size_t j = 1; j <= n; ++j) {
        r[j - 1] = -(psi[j - 1] - 2.0 * psi[j] + psi[j + 1] + h2 * tables.f(psi[j]));
        a[j - 1] = -2.0 + h2 * tables.f_prime(psi[j]);
      }
      // Thomas with unit off-diagonals.
      b.assign(n, 0.0);
      double worst = 0.0;
      for (std::size_t j = 1; j < n; ++j) {
        const double w = 1.0 / a[j - 1];
        a[j] -= w;
        r[j] -= w * r[j - 1];
      }
      b[n - 1] = r[n - 1] / a[n - 1];
      for (std::size_t j = n - 1; j-- > 0;) b[j] = (r[j] - b[j + 1]) / a[j];
      for (std::size_t j = 0; j < n; ++j) {
        psi[j + 1] += b[j];
        worst = std::max(worst, std::abs(b[j]));
      }
      if (worst <= 1e-15 * q) break;
    }
    bool feasible = true;
    for (std::size_t j = 1; j <= n; ++j) feasible = feasible && psi[j] >= 0.0 && psi[j] < q;
    if (!feasible) continue;
    double e = 0.0;
    for (int j = 0; j < m; ++j) e += (psi[j + 1] - psi[j]) * (psi[j + 1] - psi[j]);
    for (int j = 1; j <= rows; ++j) e += h2 * tables.F(j < m ? psi[j] : q);
    e += h2 * lambda * lambda * static_cast<double>(n);
    if (e < best_energy) {
      best_energy = e;
      std::fill(best.begin(), best.end(), q);
      std::copy(psi.begin(), psi.end() - 1, best.begin());
    }
  }
  return best;
}

SolutionBounds solution_bounds(const JetState& state, const JetCase& jet) {
  const Grid& g = *state.grid;
  const DownstreamState downstream(jet.profile_ptr(), state.lambda, jet.p_atm());
  SolutionBounds b;
  b.curve_excess = -std::numeric_limits<double>::infinity();
  for (double k : state.curve.k)
    b.curve_excess = std::max(b.curve_excess, k - (jet.geometry().H_bar() + g.h));
  const std::vector<double> strip = discrete_strip_stream(jet.tables(), state.lambda, g.h, g.ny);
  b.comparison_excess = -std::numeric_limits<double>::infinity();
  b.strip_excess = b.comparison_excess;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.cls[k] == NodeClass::Exterior) continue;
    const int j = g.row(k);
    const double bound = downstream.stream(g.y(j));
    b.comparison_excess = std::max(b.comparison_excess, state.field.psi[k] - bound);
    b.strip_excess = std::max(b.strip_excess, state.field.psi[k] - strip[static_cast<std::size_t>(j)]);
  }
  b.positivity = velocity_pressure_fields(state, jet).min_u;
  b.height_excess = downstream.height() - (jet.geometry().a() + g.h);
  return b;
}

UniquenessResult uniqueness_probe(const JetCase& jet, double lambda, double h,
                                  const SolverConfig& solver, const SolveOptions& options) {
  UniquenessResult r;
  r.tolerance = 10 * default_tol_field(solver, jet.q());
  std::vector<JetState> branches;
  for (Initialization init : {Initialization::Profile, Initialization::Dry})
    for (SweepOrder order : {SweepOrder::Lexicographic, SweepOrder::RedBlack}) {
      SolverConfig cfg = solver;
      cfg.order = order;
      SolveOptions opt = options;
      opt.init = init;
      branches.push_back(detachment_height(jet, lambda, h, cfg, opt));
      r.energies.push_back(branches.back().report.energy_trace.back());
    }
  for (std::size_t a = 0; a < branches.size(); ++a)
    for (std::size_t b = a + 1; b < branches.size(); ++b)
      r.gap = std::max(r.gap, max_difference(branches[a].field, branches[b].field));
  r.pass = r.gap <= r.tolerance;
  return r;
}

ProbeSummary curve_probes(const JetState& state, const JetCase& jet, int stride) {
  const double h = state.h;
  ProbeSummary s;
  s.density_min = std::numeric_limits<double>::infinity();
  s.density_max = -s.density_min;
  s.measure_lo = std::numeric_limits<double>::infinity();
  s.measure_hi = -s.measure_lo;
  std::vector<double> coarse, fine;
  const FreeBoundaryCurve& c = state.curve;
  for (std::size_t n = 0; n < c.size(); n += static_cast<std::size_t>(std::max(stride, 1))) {
    if (c.truncated[n] || c.last_wet[n] < 0) continue;
    const std::array<double, 2> x0{c.x[n], c.k[n]};
    try {
      (void)density_ratio(state.field, x0, 32 * h);
    } catch (const DomainError&) {
      continue;
    }
    ++s.points;
    const double d = density_ratio(state.field, x0, 8 * h);
    s.density_min = std::min(s.density_min, d);
    s.density_max = std::max(s.density_max, d);
    if (d >= 0.1 && d <= 0.9) ++s.density_in_band;
    for (double r : {8 * h, 16 * h, 32 * h}) {
      const double mu = ball_measure(state.field, jet.tables(), x0, r) / r;
      s.measure_lo = std::min(s.measure_lo, mu);
      s.measure_hi = std::max(s.measure_hi, mu);
    }
    if (!nondegeneracy_probe(state.field, state.lambda, x0, 8 * h).pass) ++s.nondegeneracy_fail;
    coarse.push_back(blowup_rescale(state.field, state.lambda, x0, 16 * h).deviation);
    fine.push_back(blowup_rescale(state.field, state.lambda, x0, 8 * h).deviation);
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  s.blowup_coarse = median(coarse);
  s.blowup_fine = median(fine);
  return s;
}

}  // namespace fbjet
