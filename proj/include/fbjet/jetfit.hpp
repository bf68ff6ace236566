#pragma once

// The outer problem: choose the free-boundary speed so the jet detaches at
// the nozzle lip, continue in the truncation length and reconstruct the flow.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbjet/domain.hpp"
#include "fbjet/freeboundary.hpp"
#include "fbjet/profiles.hpp"
#include "fbjet/solver.hpp"

namespace fbjet {

/// Inner solve did not converge. Carries the partial report.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Fit could not be bracketed.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nozzle, inlet velocity and everything that depends only on L.
class JetCase {
 public:
  JetCase(NozzleGeometry geometry, std::shared_ptr<const UpstreamProfile> profile,
          double L, double p_atm = 0.0);
  JetCase(const JetCase&) = delete;
  JetCase& operator=(const JetCase&) = delete;

  const NozzleGeometry& geometry() const { return geometry_; }
  const UpstreamProfile& profile() const { return *profile_; }
  std::shared_ptr<const UpstreamProfile> profile_ptr() const { return profile_; }
  const VorticityModel& model() const { return model_; }
  const VorticityTables& tables() const { return tables_; }
  const TruncatedDomain& domain() const { return domain_; }
  const InletProfile& inlet() const { return inlet_; }
  double L() const { return L_; }
  double p_atm() const { return p_atm_; }
  double q() const { return model_.flux(); }
  double lambda0() const { return profile_->lambda0(); }

  /// Rasterized domain with the Dirichlet data of speed lambda.
  Grid grid(double lambda, double h) const;

 private:
  NozzleGeometry geometry_;
  std::shared_ptr<const UpstreamProfile> profile_;
  double L_, p_atm_;
  VorticityModel model_;
  VorticityTables tables_;
  TruncatedDomain domain_;
  InletProfile inlet_;
};

enum class Initialization { Profile, Dry };

struct SolveOptions {
  int levels = 3;  // grids h 2^(levels-1), ..., 2h, h
  Initialization init = Initialization::Profile;
  int extrapolation_columns = 4;
};

/// One solved (lambda, L, h).
struct JetState {
  double lambda = 0.0, h = 0.0;
  std::shared_ptr<const Grid> grid;
  StreamField field;
  SolveReport report;  // finest level
  double wall_time = 0.0;  // all levels
  FreeBoundaryCurve curve;
  double detachment = 0.0;  // k(0+)
};

/// k(0+) by a least-squares line through the first m untruncated samples
/// with x > 0.
double extrapolate_detachment(const FreeBoundaryCurve& curve, int m);

/// Minimizes on nested grids (or from warm on the same grid) and extracts
/// the curve. Throws NonConvergence.
JetState detachment_height(const JetCase& jet, double lambda, double h,
                           const SolverConfig& solver, const SolveOptions& options,
                           const JetState* warm = nullptr);

struct FitConfig {
  double lambda_hi = 0.0;  // 0: 1.5 lambda0; doubled until k(0) < a
  double cap_factor = 10.0;
  double tol_lambda = 1e-4;
  double tol_detach = 0.0;  // 0: h
  int max_bisections = 60;
  std::vector<double> L_schedule;
  double grid_h = 1.0 / 64;
  SolveOptions solve;
};

struct FitStep {
  double lambda, detachment, h;
  bool below;  // k(0) < a
};

struct FitOutcome {
  double L = 0.0;
  double lambda = 0.0;
  JetState solution;
  std::vector<FitStep> trace;
  bool detach_ok = false;
  bool monotone = true;
  bool scanned = false;
};

/// Smallest lambda >= lambda0 with k(0) < a by bisection on coarse-to-fine
/// grids; the solution returned is the one at the upper bracket end. seed
/// centres the first bracket when given.
FitOutcome fit_lambda(const JetCase& jet, const FitConfig& config,
                      const SolverConfig& solver, std::optional<double> seed = {});

struct ContinuationEntry {
  double L = 0.0;
  bool ok = false;
  std::string error;
  std::optional<FitOutcome> fit;
};

struct FitResult {
  std::vector<ContinuationEntry> entries;
  double spread = 0.0;
  double extrapolated = 0.0;  // linear in 1/L through the last two fits
  bool unstable = false;
};

FitResult continuation_in_L(const NozzleGeometry& geometry,
                            std::shared_ptr<const UpstreamProfile> profile,
                            const FitConfig& config, const SolverConfig& solver,
                            double p_atm = 0.0);

struct FlowFields {
  std::vector<double> u, v, p;  // NaN off the wet set
  double min_u = 0.0;           // wet nodes two cells from walls
  double interface_pressure = 0.0;  // max |p - p_atm| below the curve
};

FlowFields velocity_pressure_fields(const JetState& state, const JetCase& jet);

struct AsymptoticsReport {
  double x_upstream = 0.0, x_downstream = 0.0;
  double upstream = 0.0;    // max |psi - int_0^y u0|
  double downstream = 0.0;  // max |psi - min(Psi_lambda, Q)|
  double height = 0.0;      // |k - h_lambda|
};

/// Throws DomainError when a probe column is off the grid.
AsymptoticsReport asymptotics_report(const JetState& state, const JetCase& jet,
                                     double x_upstream, double x_downstream);
AsymptoticsReport asymptotics_report(const JetState& state, const JetCase& jet);

struct SmoothFit {
  bool skipped = false;
  std::string reason;
  double slope = 0.0, g_prime = 0.0, gap = 0.0;
};

SmoothFit smooth_fit_check(const FreeBoundaryCurve& curve, const NozzleGeometry& geometry,
                           int m);

struct SolutionBounds {
  double curve_excess = 0.0;       // max k - (H_bar + h)
  double comparison_excess = 0.0;  // max psi - min(Psi_lambda, Q)
  double strip_excess = 0.0;       // max psi - discrete_strip_stream
  double positivity = 0.0;         // min u over wet nodes two cells from walls
  double height_excess = 0.0;      // h_lambda - (a + h)
};

/// Minimizer of the lattice energy of one x-invariant column of spacing h:
/// values at y = j h, j = 0 .. rows, with every node penalized. The wet
/// height is a whole number of cells, so this differs from min(Psi_lambda, Q)
/// by up to about lambda h near h_lambda.
std::vector<double> discrete_strip_stream(const VorticityTables& tables, double lambda,
                                          double h, int rows);

SolutionBounds solution_bounds(const JetState& state, const JetCase& jet);

struct UniquenessResult {
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<double> energies;
};

/// Two initializations times two sweep orders at fixed lambda.
UniquenessResult uniqueness_probe(const JetCase& jet, double lambda, double h,
                                  const SolverConfig& solver, const SolveOptions& options);

struct ProbeSummary {
  int points = 0;
  int density_in_band = 0;
  double density_min = 0.0, density_max = 0.0;
  double measure_lo = 0.0, measure_hi = 0.0;  // min and max of mu(B_r)/r
  int nondegeneracy_fail = 0;
  double blowup_coarse = 0.0, blowup_fine = 0.0;  // medians at 16h and 8h
};

/// Density, measure, nondegeneracy and blow-up probes at every stride-th
/// curve point whose largest ball lies in the penalized region.
ProbeSummary curve_probes(const JetState& state, const JetCase& jet, int stride = 4);

}  // namespace fbjet
