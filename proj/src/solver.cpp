#include "fbjet/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <set>
#include <tuple>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fbjet {

void SolverConfig::validate() const {
  std::ostringstream msg;
  if (max_sweeps < 0) msg << "max_sweeps must be non-negative; ";
  if (tol_field < 0.0) msg << "tol_field must be positive; ";
  if (!(tol_energy > 0.0)) msg << "tol_energy must be positive; ";
  if (mode == UpdateMode::Penalized && !(epsilon > 0.0))
    msg << "epsilon must be positive in penalized mode; ";
  if (!(newton_tol > 0.0)) msg << "newton_tol must be positive; ";
  if (omega != 0.0 && !(omega >= 1.0 && omega < 2.0)) msg << "omega must lie in [1, 2); ";
  if (energy_stride < 1) msg << "energy_stride must be >= 1; ";
  if (!msg.str().empty()) throw ConfigError("solver config: " + msg.str());
}

void StreamField::refresh_wet() {
  wet.resize(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) wet[k] = psi[k] < grid->q ? 1 : 0;
}

StreamField initial_field(const Grid& grid, const std::function<double(double)>& profile) {
  StreamField f;
  f.grid = &grid;
  f.psi = grid.value;
  for (int j = 0; j <= grid.ny; ++j) {
    double v = std::clamp(profile(grid.y(j)), 0.0, grid.q);
    for (int i = 0; i <= grid.nx; ++i) {
      std::size_t k = grid.index(i, j);
      if (grid.interior(k)) f.psi[k] = v;
    }
  }
  f.refresh_wet();
  return f;
}

StreamField dry_field(const Grid& grid) {
  StreamField f;
  f.grid = &grid;
  f.psi = grid.value;
  for (std::uint32_t k : grid.lex) f.psi[k] = grid.q;
  f.refresh_wet();
  return f;
}

StreamField prolongate(const StreamField& coarse, const Grid& fine) {
  const Grid& c = *coarse.grid;
  StreamField f;
  f.grid = &fine;
  f.psi = fine.value;
  auto at = [&](int i, int j) -> double {
    i = std::clamp(i, 0, c.nx);
    j = std::clamp(j, 0, c.ny);
    std::size_t k = c.index(i, j);
    return c.cls[k] == NodeClass::Exterior ? std::numeric_limits<double>::quiet_NaN()
                                           : coarse.psi[k];
  };
  for (std::uint32_t k : fine.lex) {
    double x = (fine.x(fine.col(k)) - c.x0) / c.h, y = (fine.y(fine.row(k)) - c.y0) / c.h;
    int i = static_cast<int>(std::floor(x)), j = static_cast<int>(std::floor(y));
    double tx = x - i, ty = y - j;
    double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    double v[4] = {at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)};
    double sum = 0.0, weight = 0.0;
    for (int n = 0; n < 4; ++n)
      if (!std::isnan(v[n]) && w[n] > 0.0) {
        sum += w[n] * v[n];
        weight += w[n];
      }
    f.psi[k] = weight > 0.0 ? std::clamp(sum / weight, 0.0, fine.q) : fine.q;
  }
  f.refresh_wet();
  return f;
}

double energy(const Problem& problem, const StreamField& field) {
  const Grid& g = *problem.grid;
  const VorticityTables& tab = *problem.tables;
  const double h2 = g.h * g.h, c = h2 * problem.lambda * problem.lambda;
  const int s = g.stride();
  const double* psi = field.psi.data();
  long double total = 0.0L;
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      std::size_t k = g.index(i, j);
      if (g.cls[k] == NodeClass::Exterior) continue;
      bool in = g.interior(k);
      // Edges to the right and upwards with at least one interior end.
      if (i < g.nx && g.cls[k + 1] != NodeClass::Exterior && (in || g.interior(k + 1))) {
        double d = psi[k + 1] - psi[k];
        total += d * d;
      }
      if (j < g.ny && g.cls[k + s] != NodeClass::Exterior && (in || g.interior(k + s))) {
        double d = psi[k + s] - psi[k];
        total += d * d;
      }
      if (in) {
        total += h2 * tab.F(psi[k]);
        if (g.penalized[k] && psi[k] < g.q) total += c;
      }
    }
  }
  return static_cast<double>(total);
}

namespace {

/// Resolved solver state shared by sweeps, trials and the public helpers.
class Relaxer {
 public:
  Relaxer(const Problem& p, const SolverConfig& cfg) : p_(p), cfg_(cfg) {
    const Grid& g = *p.grid;
    q_ = g.q;
    h2_ = g.h * g.h;
    c_ = h2_ * p.lambda * p.lambda;
    s_ = g.stride();
    zero_ = p.tables->is_zero();
    penalized_mode_ = cfg.mode == UpdateMode::Penalized;
    eps_ = cfg.epsilon;
    omega_ = cfg.omega > 0.0 ? cfg.omega
                             : 2.0 / (1.0 + std::numbers::pi * g.h / g.length_scale);
    f_bound_ = 0.0;
    if (!zero_)
      for (int k = 0; k <= 4000; ++k) {
        double t = -1.5 + (q_ + 3.0) * k / 4000.0;
        f_bound_ = std::max(f_bound_, std::abs(p.tables->f(t)));
      }
  }

  double omega() const { return omega_; }

  double neighbour_sum(const double* psi, std::size_t k) const {
    return psi[k - 1] + psi[k + 1] + psi[k - s_] + psi[k + s_];
  }

  /// Root of 8t - 2S - 2h^2 f(t) = 0.
  double smooth_min(double S) const {
    if (zero_) return 0.25 * S;
    const VorticityTables& tab = *p_.tables;
    double t = 0.25 * S;
    for (int it = 0; it < 50; ++it) {
      double g = 8.0 * t - 2.0 * S - 2.0 * h2_ * tab.f(t);
      double gp = 8.0 - 2.0 * h2_ * tab.f_prime(t);
      double dt = g / gp;
      t -= dt;
      if (std::abs(dt) <= cfg_.newton_tol * (1.0 + std::abs(t))) return t;
    }
    double lo = 0.25 * (S - h2_ * f_bound_) - 1e-3, hi = 0.25 * (S + h2_ * f_bound_) + 1e-3;
    for (int it = 0; it < 200 && hi - lo > cfg_.newton_tol; ++it) {
      double mid = 0.5 * (lo + hi);
      double g = 8.0 * mid - 2.0 * S - 2.0 * h2_ * tab.f(mid);
      (g < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// Local energy relative to the dry value Q, without the penalty.
  double smooth_part(double t, double S) const {
    double d = (t - q_) * (4.0 * (t + q_) - 2.0 * S);
    if (!zero_) d += h2_ * p_.tables->F(t);
    return d;
  }

  double penalty(double t, bool penalized) const {
    if (!penalized || !(t < q_)) return 0.0;
    if (!penalized_mode_) return c_;
    return c_ * std::min(1.0, (q_ - t) / eps_);
  }

  double local(double t, double S, bool penalized) const {
    return smooth_part(t, S) + penalty(t, penalized);
  }

  /// Exact argmin over [0, Q] of the local energy.
  double exact(double S, bool penalized) const {
    double t = std::clamp(smooth_min(S), 0.0, q_);
    if (!penalized) return t;
    if (!penalized_mode_) {
      if (!(t < q_)) return q_;
      return local(t, S, true) < 0.0 ? t : q_;  // tie goes dry
    }
    double split = std::max(0.0, q_ - eps_);
    double ta = std::clamp(t, 0.0, split);
    double tb = std::clamp(smooth_min(S + c_ / (2.0 * eps_)), split, q_);
    return local(ta, S, true) < local(tb, S, true) ? ta : tb;
  }

  /// e(t) - e(u) in a form that stays accurate when t and u are close.
  double difference(double t, double u, double S, bool penalized) const {
    double d = (t - u) * (4.0 * (t + u) - 2.0 * S);
    if (!zero_) {
      // F(t) - F(u) loses everything to rounding for tiny steps; the
      // trapezoid on F' = -2f is consistent with smooth_min.
      const double dt = t - u;
      d += h2_ * (std::abs(dt) < 1e-4 ? -dt * (p_.tables->f(t) + p_.tables->f(u))
                                      : p_.tables->F(t) - p_.tables->F(u));
    }
    return d + penalty(t, penalized) - penalty(u, penalized);
  }

  /// One relaxation step at node k. Returns the local energy change.
  /// In frozen mode a penalized node keeps its wet/dry state.
  double step(double* psi, std::uint8_t* wet, std::size_t k, bool frozen,
              double& change) const {
    return step(psi, wet, k, frozen, change, omega_);
  }

  double step(double* psi, std::uint8_t* wet, std::size_t k, bool frozen,
              double& change, double omega) const {
    const Grid& g = *p_.grid;
    const bool pen = g.penalized[k] != 0;
    const double S = neighbour_sum(psi, k);
    const double old = psi[k];
    double target;
    if (frozen && pen && !penalized_mode_) {
      if (!(old < q_)) return 0.0;
      target = std::clamp(smooth_min(S), 0.0, q_);
    } else {
      target = exact(S, pen);
    }
    double next = target;
    double d_next = difference(target, old, S, pen);
    if (target < q_ || !pen) {
      double cand = old + omega * (target - old);
      bool same_state = pen ? (cand >= 0.0 && cand < q_) : (cand >= 0.0 && cand <= q_);
      if (penalized_mode_ && pen) {
        double split = q_ - eps_;
        same_state = same_state && ((target <= split) == (cand <= split));
      }
      if (same_state) {
        double d_cand = difference(cand, old, S, pen);
        if (d_cand <= 0.0) {
          next = cand;
          d_next = d_cand;
        }
      }
    }
    if (d_next > 0.0) return 0.0;  // rounding guard: never increase
    change = std::max(change, std::abs(next - old));
    psi[k] = next;
    wet[k] = next < q_ ? 1 : 0;
    return d_next;
  }

  struct Pass {
    double change = 0.0;
    double delta_energy = 0.0;
    int flips = 0;
  };

  Pass sweep(StreamField& f, std::size_t lex_len, std::size_t red_len,
             std::size_t black_len, bool frozen) const {
    const Grid& g = *p_.grid;
    Pass pass;
    double* psi = f.psi.data();
    std::uint8_t* wet = f.wet.data();
    auto run = [&](const std::vector<std::uint32_t>& list, std::size_t len) {
      for (std::size_t n = 0; n < len; ++n) {
        std::size_t k = list[n];
        std::uint8_t was = wet[k];
        pass.delta_energy += step(psi, wet, k, frozen, pass.change);
        if (wet[k] != was) ++pass.flips;
      }
    };
    if (cfg_.order == SweepOrder::Lexicographic) {
      run(g.lex, lex_len);
    } else {
      run(g.red, red_len);
      run(g.black, black_len);
    }
    return pass;
  }

 private:
  const Problem& p_;
  const SolverConfig& cfg_;
  double q_, h2_, c_, eps_, omega_, f_bound_;
  int s_;
  bool zero_, penalized_mode_;
};

/// Tracks the sweep-to-sweep contraction to bound the remaining error.
class ErrorEstimate {
 public:
  void reset() { history_.clear(); }
  double push(double change) {
    history_.push_back(change);
    if (change == 0.0) return 0.0;
    const std::size_t n = history_.size();
    if (n < 3) return std::numeric_limits<double>::infinity();
    std::size_t m = std::min<std::size_t>(10, n - 1);
    double base = history_[n - 1 - m];
    if (!(base > 0.0)) return std::numeric_limits<double>::infinity();
    double rho = std::pow(change / base, 1.0 / static_cast<double>(m));
    // The worst single-step ratio in the window guards against plateaus.
    for (std::size_t i = n - m; i < n; ++i)
      if (history_[i - 1] > 0.0) rho = std::max(rho, history_[i] / history_[i - 1]);
    if (!(rho < 1.0)) return std::numeric_limits<double>::infinity();
    return change * rho / (1.0 - rho);
  }

 private:
  std::vector<double> history_;
};

struct Lists {
  std::size_t lex, red, black;
};

Lists full_lists(const Grid& g) { return {g.lex.size(), g.red.size(), g.black.size()}; }

/// Prefixes of the traversal lists covering rows <= jmax.
Lists row_prefix(const Grid& g, int jmax) {
  if (jmax >= g.ny) return full_lists(g);
  const std::uint32_t cut = static_cast<std::uint32_t>(g.index(0, jmax + 1));
  auto len = [cut](const std::vector<std::uint32_t>& v) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), cut) - v.begin());
  };
  return {len(g.lex), len(g.red), len(g.black)};
}

class Minimizer {
 public:
  Minimizer(const Problem& p, const SolverConfig& cfg, StreamField& f, SolveReport& r)
      : p_(p), cfg_(cfg), relax_(p, cfg), f_(f), r_(r) {
    const Grid& g = *p.grid;
    tol_ = cfg.tol_field > 0.0 ? cfg.tol_field : 1e-8 * g.q;
    max_sweeps_ = cfg.max_sweeps > 0 ? cfg.max_sweeps : 50 * (std::max(g.nx, g.ny) + 1);
  }

  void run() {
    energy_ = energy(p_, f_);
    r_.energy_trace.push_back(energy_);
    bool converged = false;
    const Grid& g = *p_.grid;
    const int cycle_budget = 8 * (std::max(g.nx, g.ny) + 1);
    while (r_.sweeps < max_sweeps_) {
      bool settled = relax_to_tolerance(full_lists(g), false, tol_, true, cycle_budget);
      int moved = cfg_.front_moves ? front_phase() : 0;
      if (settled && moved == 0) {
        converged = true;
        break;
      }
    }
    if (converged && cfg_.polish) {
      // Push the smooth part well below tol so difference quotients are clean.
      relax_to_tolerance(full_lists(g), true, 1e-5 * tol_, true, cycle_budget);
    }
    energy_ = energy(p_, f_);
    if (r_.energy_trace.back() != energy_) r_.energy_trace.push_back(energy_);
    r_.converged = converged;
  }

 private:
  /// SOR until the error estimate is below tol. Returns false when the sweep
  /// budget runs out. Jump sweeps must also end without wet/dry flips.
  bool relax_to_tolerance(Lists lists, bool frozen, double tol, bool record,
                          int budget = std::numeric_limits<int>::max()) {
    ErrorEstimate est;
    int local = 0;
    while (r_.sweeps < max_sweeps_ && local < budget) {
      auto pass = relax_.sweep(f_, lists.lex, lists.red, lists.black, frozen);
      ++r_.sweeps;
      ++local;
      energy_ += pass.delta_energy;
      if (pass.flips > 0) est.reset();
      double err = est.push(pass.change);
      if (record) {
        r_.max_change = pass.change;
        r_.error_estimate = err;
        if (r_.sweeps % cfg_.energy_stride == 0) {
          if (r_.sweeps % (50 * cfg_.energy_stride) == 0) energy_ = energy(p_, f_);
          r_.energy_trace.push_back(std::min(energy_, r_.energy_trace.back()));
        }
      }
      // Changes far below tol are rounding noise with no usable contraction rate.
      if (pass.flips == 0 && pass.change <= tol && (err <= tol || pass.change <= 1e-3 * tol))
        return true;
    }
    return false;
  }

  /// Wetting (dir = +1) or drying (dir = -1) of one node per column at the
  /// lowest wet/dry front of a run of adjacent columns.
  struct Move {
    std::vector<std::size_t> nodes;
    int dir;
  };

  /// Sets the move's nodes; returns false if a node cannot be wetted.
  bool flip(const Move& m, double& delta) {
    const Grid& g = *p_.grid;
    double* psi = f_.psi.data();
    for (std::size_t node : m.nodes) {
      const double S = relax_.neighbour_sum(psi, node);
      double next = g.q;
      if (m.dir > 0) {
        next = std::clamp(relax_.smooth_min(S), 0.0, g.q);
        if (!(next < g.q)) return false;
      }
      delta += relax_.difference(next, psi[node], S, g.penalized[node] != 0);
      psi[node] = next;
      f_.wet[node] = next < g.q;
    }
    return true;
  }

  /// Applies a move and relaxes the window around it with the rest of the
  /// field held fixed, so the returned change bounds the globally relaxed
  /// change from above. The new state is kept only when keep is set and the
  /// energy drops by more than floor. A deep window reaches down to the
  /// bottom row.
  double windowed(const Move& m, double floor, bool keep, bool deep = false) {
    const Grid& g = *p_.grid;
    constexpr int kRadius = 8, kMaxSweeps = 300;
    int i0 = g.nx, i1 = 0, j0 = g.ny, j1 = 0;
    for (std::size_t node : m.nodes) {
      i0 = std::min(i0, g.col(node));
      i1 = std::max(i1, g.col(node));
      j0 = std::min(j0, g.row(node));
      j1 = std::max(j1, g.row(node));
    }
    window_.clear();
    const int ja = deep ? 1 : std::max(1, j0 - kRadius), jb = std::min(g.ny - 1, j1 + kRadius);
    const int ia = std::max(1, i0 - kRadius), ib = std::min(g.nx - 1, i1 + kRadius);
    for (int j = ja; j <= jb; ++j)
      for (int i = ia; i <= ib; ++i) {
        std::size_t k = g.index(i, j);
        if (g.interior(k)) window_.push_back(k);
      }
    saved_.clear();
    for (std::size_t k : window_) saved_.push_back(f_.psi[k]);
    double delta = 0.0;
    bool ok = flip(m, delta);
    if (ok) {
      const double side = std::max(ib - ia, jb - ja) + 2;
      const double omega = 2.0 / (1.0 + std::numbers::pi / side);
      for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t k : window_)
          delta += relax_.step(f_.psi.data(), f_.wet.data(), k, true, change, omega);
        if (change <= tol_) break;
      }
    }
    if (!(ok && keep && delta < -floor)) {
      for (std::size_t n = 0; n < window_.size(); ++n) {
        f_.psi[window_[n]] = saved_[n];
        f_.wet[window_[n]] = saved_[n] < g.q;
      }
    }
    return ok ? delta : std::numeric_limits<double>::infinity();
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Top wet node of the lowest wet block of column i, or npos.
  std::size_t front_of(int i) const {
    const Grid& g = *p_.grid;
    const std::size_t s = static_cast<std::size_t>(g.stride());
    for (int j = 1; j + 1 < g.ny; ++j) {
      std::size_t k = g.index(i, j);
      if (!g.interior(k) || !g.penalized[k]) continue;
      if (!f_.wet[k] || !g.interior(k + s) || !g.penalized[k + s]) return npos;
      if (!f_.wet[k + s]) return k;
    }
    return npos;
  }

  void accept(double delta) {
    energy_ += delta;
    r_.energy_trace.push_back(std::min(energy_, r_.energy_trace.back()));
    ++r_.front_moves_accepted;
  }

  /// Best one-row move of each column, kept when its windowed change is a
  /// decrease.
  int single_pass(double floor) {
    const Grid& g = *p_.grid;
    const std::size_t s = static_cast<std::size_t>(g.stride());
    int accepted = 0;
    for (int i = 1; i < g.nx; ++i) {
      std::size_t k = front_of(i);
      if (k == npos) continue;
      Move up{{k + s}, 1}, down{{k}, -1};
      double d_up = windowed(up, floor, false);
      double d_down = windowed(down, floor, false);
      const Move& best = d_up <= d_down ? up : down;
      if (std::min(d_up, d_down) < -floor) {
        accept(windowed(best, floor, true));
        ++accepted;
      } else {
        ++r_.front_moves_rejected;
      }
    }
    return accepted;
  }

  /// Moves of runs of adjacent columns, for states where every single
  /// column is balanced but a wider section is not. Each maximal run of
  /// front columns is also tried whole.
  int run_pass(double floor) {
    const Grid& g = *p_.grid;
    const std::size_t s = static_cast<std::size_t>(g.stride());
    int accepted = 0;
    auto attempt = [&](int i, int len, int dir, bool deep) {
      Move m{{}, dir};
      for (int c = i; c < i + len; ++c) {
        std::size_t k = front_of(c);
        if (k == npos) return;
        m.nodes.push_back(dir > 0 ? k + s : k);
      }
      double d = windowed(m, floor, true, deep);
      if (d < -floor) {
        accept(d);
        ++accepted;
      } else {
        ++r_.front_moves_rejected;
      }
    };
    for (int len = 2; len <= 32; len *= 2)
      for (int i = 1; i + len <= g.nx; i += len / 2)
        for (int dir : {1, -1}) attempt(i, len, dir, false);
    for (int i = 1; i < g.nx;) {
      if (front_of(i) == npos) {
        ++i;
        continue;
      }
      int end = i;
      while (end + 1 < g.nx && front_of(end + 1) != npos) ++end;
      const int len = end - i + 1;
      if (len >= 2)
        for (int dir : {1, -1}) attempt(i, len, dir, true);
      i = end + 1;
    }
    return accepted;
  }

  /// Raises suggested by the one-column balance between slope and penalty,
  /// tried together (then in halves and quarters) with a relaxation of every
  /// row up to the fronts.
  int batch_pass(double floor) {
    const Grid& g = *p_.grid;
    const std::size_t s = static_cast<std::size_t>(g.stride());
    const double q = g.q, h = g.h, lam2 = p_.lambda * p_.lambda;
    std::vector<Move> moves;
    int jmax = 0;
    for (int i = 1; i < g.nx; ++i) {
      std::size_t k = front_of(i);
      if (k == npos) continue;
      double slope = (q - f_.psi[k]) / h;
      if (slope * slope / (1.0 + h * slope / q) > lam2 && !failed_raises_.count(k + s)) {
        moves.push_back({{k + s}, 1});
        jmax = std::max(jmax, g.row(k) + 1);
      }
    }
    if (moves.empty()) return 0;
    jmax = std::min(g.ny, jmax + 2);
    const Lists lists = row_prefix(g, jmax);
    const int budget = 20 * (jmax + 10);
    const double inner_tol = 10.0 * tol_;
    relax_to_tolerance(lists, true, inner_tol, false, budget);
    double base = energy(p_, f_);
    energy_ = base;
    const std::vector<double> saved_psi = f_.psi;
    const std::vector<std::uint8_t> saved_wet = f_.wet;
    struct Batch {
      std::size_t lo, hi;
      int depth;
    };
    std::deque<Batch> queue{{0, moves.size(), 2}};
    while (!queue.empty() && r_.sweeps < max_sweeps_) {
      auto [lo, hi, depth] = queue.front();
      queue.pop_front();
      double ignored = 0.0;
      bool ok = true;
      for (std::size_t n = lo; n < hi; ++n) ok = flip(moves[n], ignored) && ok;
      relax_to_tolerance(lists, true, inner_tol, false, budget);
      const double e = energy(p_, f_);
      if (ok && e < base - floor) {
        accept(e - energy_);
        return 1;
      }
      ++r_.front_moves_rejected;
      f_.psi = saved_psi;
      f_.wet = saved_wet;
      energy_ = base;
      if (hi - lo > 1 && depth > 0) {
        std::size_t mid = lo + (hi - lo) / 2;
        queue.push_back({lo, mid, depth - 1});
        queue.push_back({mid, hi, depth - 1});
      } else {
        for (std::size_t n = lo; n < hi; ++n) failed_raises_.insert(moves[n].nodes[0]);
      }
    }
    return 0;
  }

  /// Energy-decreasing moves of the wet/dry front. Returns the number of
  /// accepted moves.
  int front_phase() {
    const Grid& g = *p_.grid;
    int accepted = 0;
    for (int round = 0; round < 4 * g.ny && r_.sweeps < max_sweeps_; ++round) {
      const double floor = cfg_.tol_energy * (1.0 + std::abs(energy_));
      int n = single_pass(floor);
      if (n == 0) n = run_pass(floor);
      if (n == 0 && accepted == 0) n = batch_pass(floor);
      if (n == 0) break;
      accepted += n;
    }
    return accepted;
  }

  const Problem& p_;
  const SolverConfig& cfg_;
  Relaxer relax_;
  StreamField& f_;
  SolveReport& r_;
  double tol_ = 0.0, energy_ = 0.0;
  int max_sweeps_ = 0;
  std::vector<std::size_t> window_;
  std::vector<double> saved_;
  std::set<std::size_t> failed_raises_;
};

}  // namespace

double local_energy(const Problem& problem, const SolverConfig& config,
                    const StreamField& field, std::size_t k, double t) {
  Relaxer r(problem, config);
  double S = r.neighbour_sum(field.psi.data(), k);
  const double q = problem.grid->q;
  // Restore the neighbour terms dropped by the relative form.
  double base = 0.0;
  const int s = problem.grid->stride();
  for (std::size_t n : {k - 1, k + 1, k - static_cast<std::size_t>(s), k + static_cast<std::size_t>(s)})
    base += (q - field.psi[n]) * (q - field.psi[n]);
  return base + r.local(t, S, problem.grid->penalized[k] != 0);
}

NodeUpdate node_update(const Problem& problem, const SolverConfig& config,
                       const StreamField& field, std::size_t k) {
  if (!problem.grid->interior(k)) throw InvalidInput("node_update: node is not interior");
  Relaxer r(problem, config);
  double S = r.neighbour_sum(field.psi.data(), k);
  double t = r.exact(S, problem.grid->penalized[k] != 0);
  return {t, t < problem.grid->q};
}

StreamField minimize(const Problem& problem, const SolverConfig& config,
                     StreamField initial, SolveReport* report) {
  config.validate();
  if (initial.grid != problem.grid) throw InvalidInput("minimize: field and grid differ");
  auto t0 = std::chrono::steady_clock::now();
  SolveReport local;
  SolveReport& r = report ? *report : local;
  r = SolveReport{};
  const Grid& g = *problem.grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.interior(k)) initial.psi[k] = std::clamp(initial.psi[k], 0.0, g.q);
    else initial.psi[k] = g.value[k];
  }
  initial.refresh_wet();
  Minimizer m(problem, config, initial, r);
  m.run();
  r.pde_residual = pde_residual(problem, initial);
  r.wet_nodes = 0;
  for (std::uint32_t k : g.lex) r.wet_nodes += initial.wet[k];
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return initial;
}

double pde_residual(const Problem& problem, const StreamField& field) {
  const Grid& g = *problem.grid;
  const int s = g.stride();
  const double q = g.q, inv_h2 = 1.0 / (g.h * g.h);
  const double* psi = field.psi.data();
  double worst = 0.0;
  for (std::uint32_t k : g.lex) {
    if (!(psi[k] < q)) continue;
    std::size_t n[4] = {k - 1u, k + 1u, k - static_cast<std::size_t>(s), k + static_cast<std::size_t>(s)};
    bool wet_stencil = true;
    double S = 0.0;
    for (std::size_t m : n) {
      wet_stencil = wet_stencil && psi[m] < q;
      S += psi[m];
    }
    if (!wet_stencil) continue;
    double r = (S - 4.0 * psi[k]) * inv_h2 + problem.tables->f(psi[k]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double bound_violation(const StreamField& field) {
  const double q = field.grid->q;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint32_t k : field.grid->lex)
    worst = std::max({worst, -field.psi[k], field.psi[k] - q});
  return worst;
}

double monotone_y_violation(const StreamField& field, double tol) {
  const Grid& g = *field.grid;
  const std::size_t s = static_cast<std::size_t>(g.stride());
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint32_t k : g.lex)
    if (g.interior(k + s)) worst = std::max(worst, field.psi[k] - field.psi[k + s] - tol);
  return worst;
}

double supersolution_violation(const Problem& problem, const StreamField& field,
                               double tol_sign) {
  const Grid& g = *problem.grid;
  const std::size_t s = static_cast<std::size_t>(g.stride());
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double* psi = field.psi.data();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint32_t k : g.lex) {
    double lap = (psi[k - 1] + psi[k + 1] + psi[k - s] + psi[k + s] - 4.0 * psi[k]) * inv_h2;
    worst = std::max(worst, lap + problem.tables->f(psi[k]) - tol_sign);
  }
  return worst;
}

double energy_trace_violation(const std::vector<double>& trace) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n < trace.size(); ++n)
    worst = std::max(worst, trace[n] - trace[n - 1] - 1e-12 * (1.0 + std::abs(trace[n - 1])));
  return worst;
}

double max_difference(const StreamField& a, const StreamField& b) {
  if (a.psi.size() != b.psi.size()) throw InvalidInput("max_difference: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.psi.size(); ++k)
    worst = std::max(worst, std::abs(a.psi[k] - b.psi[k]));
  return worst;
}

void write_field(std::ostream& out, const StreamField& field, int stride) {
  const Grid& g = *field.grid;
  stride = std::max(1, stride);
  out << "x y psi wet\n";
  char buf[128];
  for (int j = 0; j <= g.ny; j += stride) {
    for (int i = 0; i <= g.nx; i += stride) {
      std::size_t k = g.index(i, j);
      if (g.cls[k] == NodeClass::Exterior) continue;
      std::snprintf(buf, sizeof buf, "%.10g %.10g %.17g %d\n", g.x(i), g.y(j),
                    field.psi[k], field.psi[k] < g.q ? 1 : 0);
      out << buf;
    }
  }
}

}  // namespace fbjet
