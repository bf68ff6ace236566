#pragma once

// Direct minimization of the discrete truncated functional
//   J(psi) = sum_edges (psi_p - psi_q)^2 + h^2 sum F0(psi) + h^2 lambda^2 #wet
// by exact nodal relaxation with a wet/dry jump decision.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fbjet/domain.hpp"

namespace fbjet {

enum class SweepOrder { Lexicographic, RedBlack };
enum class UpdateMode { JumpExact, Penalized };

struct SolverConfig {
  int max_sweeps = 0;          // 0: 50 x nodes per side
  double tol_field = 0.0;      // 0: 1e-8 Q; bound on the estimated nodal error
  double tol_energy = 1e-13;   // relative decrease a front move must achieve
  SweepOrder order = SweepOrder::Lexicographic;
  UpdateMode mode = UpdateMode::JumpExact;
  double epsilon = 0.0;        // ramp width in penalized mode
  double newton_tol = 1e-14;
  double omega = 0.0;          // 0: 2 / (1 + pi h / length_scale)
  bool front_moves = true;
  int energy_stride = 1;       // sweeps between recorded energies
  bool polish = true;          // frozen sweeps to 1e-5 tol after convergence

  void validate() const;
};

/// Nodal unknown. wet[k] is true iff psi[k] < Q.
struct StreamField {
  const Grid* grid = nullptr;
  std::vector<double> psi;
  std::vector<std::uint8_t> wet;

  void refresh_wet();
};

/// Everything a local update needs.
struct Problem {
  const Grid* grid = nullptr;
  const VorticityTables* tables = nullptr;
  double lambda = 0.0;
};

struct SolveReport {
  int sweeps = 0;
  std::vector<double> energy_trace;
  double max_change = 0.0;
  double error_estimate = 0.0;
  double pde_residual = 0.0;
  double wall_time = 0.0;
  bool converged = false;
  int front_moves_accepted = 0;
  int front_moves_rejected = 0;
  int wet_nodes = 0;
};

/// psi = min(profile(y), Q) at interior nodes, Dirichlet data elsewhere.
StreamField initial_field(const Grid& grid, const std::function<double(double)>& profile);
/// psi = Q at interior nodes.
StreamField dry_field(const Grid& grid);

/// Bilinear transfer of a field to a finer grid over the same domain.
StreamField prolongate(const StreamField& coarse, const Grid& fine);

double energy(const Problem& problem, const StreamField& field);

struct NodeUpdate {
  double value;
  bool wet;
};

/// Exact minimizer of the local energy at interior node k with every other
/// value frozen.
NodeUpdate node_update(const Problem& problem, const SolverConfig& config,
                       const StreamField& field, std::size_t k);

/// Local energy as a function of the value at node k (constant terms kept).
double local_energy(const Problem& problem, const SolverConfig& config,
                    const StreamField& field, std::size_t k, double t);

StreamField minimize(const Problem& problem, const SolverConfig& config,
                     StreamField initial, SolveReport* report = nullptr);

/// max |Delta_h psi + f0(psi)| over wet interior nodes with wet stencils.
double pde_residual(const Problem& problem, const StreamField& field);

/// Invariant checks on a field; each returns the worst violation (<= 0 is ok).
double bound_violation(const StreamField& field);
double monotone_y_violation(const StreamField& field, double tol);
double supersolution_violation(const Problem& problem, const StreamField& field,
                               double tol_sign);
double energy_trace_violation(const std::vector<double>& trace);

double max_difference(const StreamField& a, const StreamField& b);

/// Column text: x y psi wet, every stride-th node in each direction.
void write_field(std::ostream& out, const StreamField& field, int stride = 1);

}  // namespace fbjet
