#include "fbjet/run.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "fbjet/freeboundary.hpp"
#include "fbjet/jetfit.hpp"
#include "fbjet/output.hpp"

namespace fbjet {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Non-finite values become null so the report stays valid JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Checks {
 public:
  explicit Checks(json& node) : node_(node) { node_ = json::object(); }

  void add(const std::string& name, bool pass, double value, double limit) {
    node_[name] = {{"pass", pass}, {"value", number(value)}, {"limit", number(limit)}};
    all_ = all_ && pass;
  }
  bool all() const { return all_; }

 private:
  json& node_;
  bool all_ = true;
};

struct Context {
  const RunConfig& config;
  fs::path dir;
  RunOutcome& out;
  json& report;
  Checks checks;

  void file(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    const fs::path path = dir / name;
    write_atomic(path, writer);
    out.files.push_back(path);
    report["files"].push_back(name);
  }

  void timing(const std::string& stage, double seconds) { report["timings"][stage] = seconds; }
};

std::shared_ptr<const UpstreamProfile> make_profile(const RunConfig& c) {
  return std::make_shared<const UpstreamProfile>(c.profile.build(c.geometry.H));
}

double tol_field(const RunConfig& c, double q) {
  return c.solver.tol_field > 0.0 ? c.solver.tol_field : 1e-8 * q;
}

json solve_json(const SolveReport& r) {
  return {{"sweeps", r.sweeps},
          {"converged", r.converged},
          {"max_change", number(r.max_change)},
          {"error_estimate", number(r.error_estimate)},
          {"pde_residual", number(r.pde_residual)},
          {"energy", r.energy_trace.empty() ? json(nullptr) : number(r.energy_trace.back())},
          {"energy_trace_length", r.energy_trace.size()},
          {"front_moves_accepted", r.front_moves_accepted},
          {"front_moves_rejected", r.front_moves_rejected},
          {"wet_nodes", r.wet_nodes}};
}

json state_json(const JetState& s, const JetCase& jet) {
  const DownstreamState ds(jet.profile_ptr(), s.lambda, jet.p_atm());
  return {{"lambda", s.lambda},         {"h_grid", s.h},          {"L", jet.L()},
          {"detachment", s.detachment}, {"a", jet.geometry().a()}, {"Q", jet.q()},
          {"h_lambda", ds.height()},    {"p_diff", ds.p_diff()},   {"solve", solve_json(s.report)}};
}

void emit_state(Context& ctx, const JetState& s, const std::string& prefix) {
  ctx.file(prefix + "field.txt", [&](std::ostream& o) { write_field(o, s.field, ctx.config.field_stride); });
  ctx.file(prefix + "curve.txt", [&](std::ostream& o) { write_curve(o, s.curve); });
}

/// Every enabled diagnostic on one converged state, once each.
void diagnose(Context& ctx, const JetState& s, const JetCase& jet) {
  const RunConfig& c = ctx.config;
  const double tol = tol_field(c, jet.q());
  json& d = ctx.report["diagnostics"];
  d = json::object();
  const auto t0 = std::chrono::steady_clock::now();
  for (const std::string& name : c.diagnostics) {
    const auto start = std::chrono::steady_clock::now();
    if (name == "invariants") {
      const double bounds = bound_violation(s.field);
      const double mono = monotone_y_violation(s.field, tol);
      const double trace = energy_trace_violation(s.report.energy_trace);
      d[name] = {{"bound_violation", number(bounds)},
                 {"monotone_violation", number(mono)},
                 {"energy_trace_violation", number(trace)},
                 {"single_block", true},
                 {"pde_residual", number(s.report.pde_residual)}};
      ctx.checks.add("psi_in_0_Q", bounds <= 0.0, bounds, 0.0);
      ctx.checks.add("monotone_in_y", mono <= 0.0, mono, 0.0);
      ctx.checks.add("energy_non_increasing", trace <= 0.0, trace, 0.0);
    } else if (name == "bounds") {
      const SolutionBounds b = solution_bounds(s, jet);
      d[name] = {{"curve_excess", number(b.curve_excess)},
                 {"comparison_excess", number(b.comparison_excess)},
                 {"strip_excess", number(b.strip_excess)},
                 {"positivity", number(b.positivity)},
                 {"height_excess", number(b.height_excess)}};
      ctx.checks.add("curve_bound", b.curve_excess <= 0.0, b.curve_excess, 0.0);
      ctx.checks.add("comparison_bound", b.comparison_excess <= tol, b.comparison_excess, tol);
      ctx.checks.add("wet_positivity", b.positivity >= -tol, b.positivity, -tol);
      ctx.checks.add("height_below_lip", b.height_excess <= 0.0, b.height_excess, 0.0);
    } else if (name == "probes") {
      const ProbeSummary p = curve_probes(s, jet);
      const double fraction = p.points ? static_cast<double>(p.density_in_band) / p.points : 0.0;
      const double band = p.measure_lo > 0.0 ? p.measure_hi / p.measure_lo : INFINITY;
      d[name] = {{"points", p.points},
                 {"density_in_band", p.density_in_band},
                 {"density_min", number(p.density_min)},
                 {"density_max", number(p.density_max)},
                 {"measure_lo", number(p.measure_lo)},
                 {"measure_hi", number(p.measure_hi)},
                 {"nondegeneracy_fail", p.nondegeneracy_fail},
                 {"blowup_coarse", number(p.blowup_coarse)},
                 {"blowup_fine", number(p.blowup_fine)}};
      ctx.checks.add("density_band", p.points > 0 && fraction >= 0.95, fraction, 0.95);
      ctx.checks.add("measure_band", band <= 3.0, band, 3.0);
      ctx.checks.add("nondegeneracy", p.nondegeneracy_fail == 0, p.nondegeneracy_fail, 0.0);
    } else if (name == "asymptotics") {
      const AsymptoticsReport a = asymptotics_report(s, jet);
      d[name] = {{"x_upstream", a.x_upstream}, {"x_downstream", a.x_downstream},
                 {"upstream", number(a.upstream)}, {"downstream", number(a.downstream)},
                 {"height", number(a.height)}};
      ctx.checks.add("downstream_height", a.height <= 2 * s.h, a.height, 2 * s.h);
    } else if (name == "smooth_fit") {
      const SmoothFit f = smooth_fit_check(s.curve, jet.geometry(), c.fit.solve.extrapolation_columns);
      d[name] = {{"skipped", f.skipped}, {"reason", f.reason}, {"slope", number(f.slope)},
                 {"g_prime", number(f.g_prime)}, {"gap", number(f.gap)}};
    } else if (name == "uniqueness") {
      SolveOptions options = c.fit.solve;
      options.levels = c.levels;
      const UniquenessResult u = uniqueness_probe(jet, s.lambda, s.h, c.solver, options);
      d[name] = {{"gap", number(u.gap)}, {"tolerance", u.tolerance}, {"energies", u.energies}};
      ctx.checks.add("uniqueness", u.pass, u.gap, u.tolerance);
    } else if (name == "flow") {
      const FlowFields f = velocity_pressure_fields(s, jet);
      d[name] = {{"min_u", number(f.min_u)}, {"interface_pressure", number(f.interface_pressure)}};
      const Grid& g = *s.grid;
      ctx.file("flow.txt", [&](std::ostream& o) {
        char line[128];
        o << "x y u v p\n";
        for (int j = 0; j <= g.ny; j += c.field_stride)
          for (int i = 0; i <= g.nx; i += c.field_stride) {
            const std::size_t k = g.index(i, j);
            if (std::isnan(f.u[k])) continue;
            std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g\n", g.x(i), g.y(j), f.u[k],
                          f.v[k], f.p[k]);
            o << line;
          }
      });
    }
    ctx.timing("diagnostic_" + name, seconds_since(start));
  }
  ctx.timing("diagnostics", seconds_since(t0));
}

void run_profiles(Context& ctx) {
  const RunConfig& c = ctx.config;
  auto profile = make_profile(c);
  const VorticityModel model(profile);
  const double q = profile->flux(), H = profile->height(), lam0 = profile->lambda0();
  constexpr int kSamples = 64;
  ctx.file("profiles.txt", [&](std::ostream& o) {
    char line[160];
    o << "t kappa f0 F0\n";
    for (int n = 0; n <= kSamples; ++n) {
      const double t = q * n / kSamples;
      std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g\n", t, model.kappa(t), model.f0(t),
                    model.F0(t));
      o << line;
    }
  });
  double chi_error = 0.0;
  for (int n = 0; n <= kSamples; ++n) {
    const double s = H * n / kSamples;
    chi_error = std::max(chi_error, std::abs(chi(*profile, s, 0.0) - s));
  }
  ctx.checks.add("chi_identity", chi_error <= 1e-10, chi_error, 1e-10);
  json heights = json::array();
  const double lambdas[] = {lam0, 1.5 * lam0, 3.0 * lam0};
  for (int m = 0; m < 3; ++m) {
    const DownstreamState ds(profile, lambdas[m], c.p_atm);
    const double flux = integrate([&](double t) { return ds.velocity(t); }, 0.0, ds.height(), 1e-12);
    heights.push_back({{"lambda", lambdas[m]}, {"h_lambda", ds.height()}, {"p_diff", ds.p_diff()},
                       {"flux_error", std::abs(flux - q)}});
    ctx.checks.add("flux_identity_" + std::to_string(m), std::abs(flux - q) <= 1e-8, std::abs(flux - q), 1e-8);
    ctx.file("chi_" + std::to_string(m) + ".txt", [&](std::ostream& o) {
      char line[128];
      o << "s chi u1\n";
      for (int n = 0; n <= kSamples; ++n) {
        const double s = H * n / kSamples, t = ds.chi(s);
        std::snprintf(line, sizeof line, "%.17g %.17g %.17g\n", s, t, ds.velocity(t));
        o << line;
      }
    });
  }
  const double h0 = DownstreamState(profile, lam0, c.p_atm).height();
  ctx.checks.add("height_at_lambda0", std::abs(h0 - H) <= 1e-9, std::abs(h0 - H), 1e-9);
  ctx.report["profiles"] = {{"Q", q}, {"H", H}, {"lambda0", lam0}, {"chi_error", chi_error},
                            {"heights", heights}};
}

void run_solve(Context& ctx) {
  const RunConfig& c = ctx.config;
  if (!c.lambda) throw ConfigError("lambda: required by solve (set it in the file or pass --lambda)");
  const JetCase jet(c.geometry.build(), make_profile(c), c.L_schedule.back(), c.p_atm);
  SolveOptions options = c.fit.solve;
  options.levels = c.levels;
  const auto t0 = std::chrono::steady_clock::now();
  const JetState s = detachment_height(jet, *c.lambda, c.grid_h, c.solver, options);
  ctx.timing("solve", seconds_since(t0));
  ctx.report["solution"] = state_json(s, jet);
  emit_state(ctx, s, "");
  diagnose(ctx, s, jet);
}

json fit_json(const FitOutcome& f) {
  json trace = json::array();
  for (const FitStep& s : f.trace)
    trace.push_back({{"lambda", s.lambda}, {"detachment", s.detachment}, {"h", s.h}, {"below", s.below}});
  return {{"L", f.L},           {"lambda_L", f.lambda},   {"detach_ok", f.detach_ok},
          {"monotone", f.monotone}, {"scanned", f.scanned}, {"trace", trace}};
}

void run_fit(Context& ctx) {
  const RunConfig& c = ctx.config;
  const JetCase jet(c.geometry.build(), make_profile(c), c.L_schedule.back(), c.p_atm);
  const auto t0 = std::chrono::steady_clock::now();
  FitOutcome f = fit_lambda(jet, c.fit_config(), c.solver);
  f.L = jet.L();
  ctx.timing("fit", seconds_since(t0));
  ctx.report["fit"] = fit_json(f);
  ctx.report["solution"] = state_json(f.solution, jet);
  ctx.checks.add("detachment_at_lip", f.detach_ok, std::abs(f.solution.detachment - jet.geometry().a()),
                 c.fit.tol_detach > 0.0 ? c.fit.tol_detach : c.grid_h);
  emit_state(ctx, f.solution, "");
  diagnose(ctx, f.solution, jet);
}

void run_continue(Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult r = continuation_in_L(c.geometry.build(), make_profile(c), c.fit_config(), c.solver, c.p_atm);
  ctx.timing("continuation", seconds_since(t0));
  json entries = json::array();
  const FitOutcome* last = nullptr;
  double last_L = 0.0;
  bool all_ok = true;
  std::string first_error;
  for (const ContinuationEntry& e : r.entries) {
    json j = {{"L", e.L}, {"ok", e.ok}};
    if (!e.error.empty()) j["error"] = e.error;
    if (e.fit) {
      j["fit"] = fit_json(*e.fit);
      last = &*e.fit;
      last_L = e.L;
    }
    if (!e.ok && first_error.empty()) first_error = e.error;
    all_ok = all_ok && e.ok;
    entries.push_back(j);
  }
  ctx.report["continuation"] = {{"entries", entries}, {"spread", number(r.spread)},
                                {"extrapolated", number(r.extrapolated)}, {"unstable", r.unstable}};
  ctx.checks.add("all_lengths_fitted", all_ok, static_cast<double>(r.entries.size()), 0.0);
  ctx.checks.add("L_stability", !r.unstable, r.spread, 5 * c.fit.tol_lambda);
  if (!last) throw DomainError("continuation produced no fit: " + first_error);
  const JetCase jet(c.geometry.build(), make_profile(c), last_L, c.p_atm);
  ctx.report["solution"] = state_json(last->solution, jet);
  emit_state(ctx, last->solution, "");
  diagnose(ctx, last->solution, jet);
}

/// Small-grid versions of the property suite on the built-in presets.
void run_verify(Context& ctx) {
  const RunConfig& c = ctx.config;
  json& v = ctx.report["verify"];
  auto t0 = std::chrono::steady_clock::now();
  for (const char* name : {"constant", "quadratic_shear"}) {
    auto profile = std::make_shared<const UpstreamProfile>(
        std::string(name) == "constant" ? UpstreamProfile::constant(1.0, 1.0)
                                        : UpstreamProfile::quadratic_shear(1.0, 1.0, 1.0));
    double chi_error = 0.0;
    for (int n = 0; n <= 100; ++n)
      chi_error = std::max(chi_error, std::abs(chi(*profile, n / 100.0, 0.0) - n / 100.0));
    const double h0 = DownstreamState(profile, profile->lambda0()).height();
    ctx.checks.add(std::string("chi_identity_") + name, chi_error <= 1e-10, chi_error, 1e-10);
    ctx.checks.add(std::string("height_at_lambda0_") + name, std::abs(h0 - 1.0) <= 1e-9,
                   std::abs(h0 - 1.0), 1e-9);
  }
  ctx.timing("verify_profiles", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  const double h = 1.0 / 32;
  const JetCase jet(NozzleGeometry::straight(1.0),
                    std::make_shared<const UpstreamProfile>(UpstreamProfile::constant(1.0, 1.0)), 4.0);
  FitConfig fit = c.fit;
  fit.grid_h = h;
  fit.solve.levels = 2;
  const FitOutcome f = fit_lambda(jet, fit, c.solver);
  double dk = 0.0;
  for (std::size_t n = 0; n < f.solution.curve.size(); ++n)
    if (f.solution.curve.x[n] <= 2.0) dk = std::max(dk, std::abs(f.solution.curve.k[n] - 1.0));
  const double residual = f.solution.report.pde_residual;
  const SolutionBounds b = solution_bounds(f.solution, jet);
  const double tol = tol_field(c, jet.q());
  v["straight"] = {{"lambda_L", f.lambda}, {"max_k_error", dk}, {"pde_residual", residual}};
  ctx.checks.add("straight_lambda", std::abs(f.lambda - 1.0) <= 1e-3, f.lambda - 1.0, 1e-3);
  ctx.checks.add("straight_curve", dk <= 2 * h, dk, 2 * h);
  ctx.checks.add("straight_residual", residual <= 1e-8, residual, 1e-8);
  ctx.checks.add("straight_comparison", b.comparison_excess <= tol, b.comparison_excess, tol);
  ctx.checks.add("straight_bounds", bound_violation(f.solution.field) <= 0.0,
                 bound_violation(f.solution.field), 0.0);
  ctx.checks.add("straight_monotone", monotone_y_violation(f.solution.field, tol) <= 0.0,
                 monotone_y_violation(f.solution.field, tol), 0.0);
  ctx.timing("verify_straight", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  auto shear = std::make_shared<const UpstreamProfile>(UpstreamProfile::quadratic_shear(1.0, 1.0, 1.0));
  const VorticityModel model(shear);
  const VorticityTables tables(model);
  const double lambda = 2.5, q = shear->flux();
  const DownstreamState ds(shear, lambda);
  const Grid g = rectangle_grid(2.0, 1.0, h, q, [&](double y) { return std::min(ds.stream(y), q); });
  const Problem problem{&g, &tables, lambda};
  SolveReport report;
  const StreamField field =
      minimize(problem, c.solver, initial_field(g, [&](double y) { return ds.stream(y); }), &report);
  const FreeBoundaryCurve curve = extract_curve(field, lambda);
  double flat = 0.0, grad_lo = INFINITY, grad_hi = -INFINITY;
  for (std::size_t n = 0; n < curve.size(); ++n) {
    flat = std::max(flat, std::abs(curve.k[n] - ds.height()));
    if (std::isnan(curve.grad_mag[n])) continue;
    grad_lo = std::min(grad_lo, curve.grad_mag[n] / lambda);
    grad_hi = std::max(grad_hi, curve.grad_mag[n] / lambda);
  }
  v["strip"] = {{"converged", report.converged}, {"flatness", flat},
                {"grad_ratio_min", number(grad_lo)}, {"grad_ratio_max", number(grad_hi)}};
  ctx.checks.add("strip_converged", report.converged, report.sweeps, 0.0);
  ctx.checks.add("strip_flat", flat <= 2 * h, flat, 2 * h);
  ctx.checks.add("strip_bernoulli", grad_lo >= 0.85 && grad_hi <= 1.15,
                 std::max(1.0 - grad_lo, grad_hi - 1.0), 0.15);
  ctx.timing("verify_strip", seconds_since(t0));
}

}  // namespace

json to_json(const RunConfig& c) {
  auto order = c.solver.order == SweepOrder::RedBlack ? "red_black" : "lexicographic";
  auto mode = c.solver.mode == UpdateMode::Penalized ? "penalized" : "jump_exact";
  json j = {
      {"geometry", {{"preset", c.geometry.preset}, {"a", c.geometry.a}, {"H", c.geometry.H},
                    {"width", c.geometry.width}}},
      {"profile", {{"preset", c.profile.preset}, {"speed", c.profile.speed},
                   {"base", c.profile.base}, {"curvature", c.profile.curvature}}},
      {"p_atm", c.p_atm},
      {"grid", {{"h", c.grid_h}, {"levels", c.levels}}},
      {"L_schedule", c.L_schedule},
      {"solver", {{"max_sweeps", c.solver.max_sweeps}, {"tol_field", c.solver.tol_field},
                  {"tol_energy", c.solver.tol_energy}, {"sweep_order", order}, {"mode", mode},
                  {"epsilon", c.solver.epsilon}, {"newton_tol", c.solver.newton_tol},
                  {"omega", c.solver.omega}}},
      {"fit", {{"lambda_hi", c.fit.lambda_hi}, {"cap_factor", c.fit.cap_factor},
               {"tol_lambda", c.fit.tol_lambda}, {"tol_detach", c.fit.tol_detach},
               {"max_bisections", c.fit.max_bisections},
               {"extrapolation_columns", c.fit.solve.extrapolation_columns},
               {"init", c.fit.solve.init == Initialization::Dry ? "dry" : "profile"}}},
      {"output", {{"directory", c.output_dir}, {"field_stride", c.field_stride}}},
      {"diagnostics", c.diagnostics},
  };
  if (c.lambda) j["lambda"] = *c.lambda;
  return j;
}

RunOutcome run(const std::string& subcommand, const RunConfig& config) {
  RunOutcome out;
  out.directory = output_directory(config.output_dir);
  json& report = out.report;
  report = {{"subcommand", subcommand},
            {"config", to_json(config)},
            {"versions", {{"fbjet", kVersion}, {"cxx", __cplusplus}}},
            {"files", json::array()},
            {"timings", json::object()}};
  Context ctx{config, out.directory, out, report, Checks(report["checks"])};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    validate(config);
    if (subcommand == "profiles") run_profiles(ctx);
    else if (subcommand == "solve") run_solve(ctx);
    else if (subcommand == "fit") run_fit(ctx);
    else if (subcommand == "continue") run_continue(ctx);
    else if (subcommand == "verify") run_verify(ctx);
    else throw ConfigError("unknown subcommand '" + subcommand + "'");
    out.exit_code = ctx.checks.all() ? kExitPass : kExitCheckFailure;
  } catch (const NonConvergence& e) {
    report["error"] = {{"kind", "non_convergence"}, {"message", e.what()},
                       {"solve", solve_json(e.report())}};
    out.exit_code = kExitNonConvergence;
  } catch (const ConfigError& e) {
    report["error"] = {{"kind", "configuration"}, {"message", e.what()}};
    out.exit_code = kExitConfigError;
  } catch (const InvalidInput& e) {
    report["error"] = {{"kind", "configuration"}, {"message", e.what()}};
    out.exit_code = kExitConfigError;
  } catch (const std::exception& e) {
    report["error"] = {{"kind", "failure"}, {"message", e.what()}};
    out.exit_code = kExitCheckFailure;
  }
  ctx.timing("total", seconds_since(t0));
  report["exit_code"] = out.exit_code;
  report["pass"] = out.exit_code == kExitPass;
  const fs::path path = out.directory / "report.json";
  write_atomic(path, report_text(report));
  out.files.push_back(path);
  return out;
}

}  // namespace fbjet
