#pragma once

// Convex allocation engine. Solves the common core of every planning problem
// here: minimize expected transmission energy (plus optional linear selection
// costs) subject to per-state time budgets and multicast rate constraints
//
//   required_rate * y  <=  (B/T) * E_H[ t * log2(1 + e h / (t n0)) ]
//
// over per-(pair, state) time/energy variables and an optional selection
// block y with simplex rows (sum_l y = 1), a quality floor (sum_l l y >= r)
// and box bounds. The rate expectation is jointly concave in (t, e) (it is
// the perspective of log2(1+.)), so the problem is convex.
//
// Method: log-barrier interior point with a short-step path-following
// schedule. The Newton system's Hessian is a positive 2x2-block-diagonal
// core (per (pair,state) time/energy pair) plus one rank-one term per
// nonlinear or coupling constraint, so each step factors a small Schur
// complement instead of the full system. Simplex equalities are kept
// explicit and handled through the KKT system. Internally everything is
// nondimensionalized (t by T, e by T n0 / h_ref, gains by h_ref, rates by B),
// which keeps the iterates O(1)-scaled and makes the documented scaling laws
// of the optimum hold to machine precision.

#include <string>
#include <utility>
#include <vector>

#include "tilecast/types.hpp"

namespace tilecast {

// Perspective transmission rate in bits/s, continuously extended to 0 at
// t = 0. Throws std::invalid_argument on negative t or e or nonpositive
// h/n0/B/T.
double perspective_rate(double t, double e, double h, double n0, double B, double T);

// (d/dt, d/de) of perspective_rate. Throws std::domain_error at t = 0.
std::pair<double, double> perspective_rate_gradient(double t, double e, double h, double n0,
                                                    double B, double T);

// (subset, level) names one multicast stream: the tiles of P_subset encoded
// at `level`. Baselines reuse the shape with singleton pseudo-subsets.
struct PairKey {
  UserSubset subset;
  int level = 0;
  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend bool operator<(const PairKey& a, const PairKey& b) {
    if (!(a.subset == b.subset)) return a.subset < b.subset;
    return a.level < b.level;
  }
};

struct RateRequirement {
  int pair = -1;                 // index into ConvexSubproblem::pairs
  int user = -1;                 // 0-based row of ConvexSubproblem::gain
  double required_rate_bps = 0;  // |P_S| * D_l; scaled by y[y_index] if >= 0
  int y_index = -1;
};

struct SimplexRow {
  std::vector<int> y_indices;  // sum of these y equals 1
};

struct QualityRow {
  std::vector<int> y_indices;  // sum coeff * y >= rhs; coeff distinct
  std::vector<double> coeff;
  double rhs = 0;
};

struct ConvexSubproblem {
  int state_count = 0;
  std::vector<double> state_prob;         // q, sums to 1
  std::vector<std::vector<double>> gain;  // gain[user][state], positive
  double bandwidth_hz = 0;
  double frame_seconds = 0;
  double noise_watts = 0;

  std::vector<PairKey> pairs;
  std::vector<RateRequirement> rates;

  int y_count = 0;
  std::vector<double> y_cost;  // Joules per unit y (transcoding + penalty terms)
  std::vector<SimplexRow> simplex;
  std::vector<QualityRow> quality;
  double fixed_cost = 0;  // Joules added verbatim to the objective
};

struct SolverOptions {
  double feasibility_tol = 1e-8;   // relative; rate rows normalized by required bits
  double stationarity_tol = 1e-6;  // relative duality-gap / KKT residual target
  int max_newton = 500;
  double barrier_growth = 10.0;
  double snap_time_rel = 1e-9;    // zero-snap threshold for t, relative to T
  double snap_energy_rel = 1e-12; // zero-snap threshold for e, relative to max e
};

enum class SolveStatus { optimal, infeasible, max_iterations };
const char* to_string(SolveStatus s);

struct SolverReport {
  SolveStatus status = SolveStatus::max_iterations;
  double objective = 0;             // Joules, includes fixed_cost and y costs
  double max_primal_violation = 0;  // relative, over all constraint families
  // Stationarity certificate: H^{-1}-norm of the Lagrangian gradient at the
  // final interior iterate under the barrier's implied multipliers, i.e. the
  // final Newton decrement divided by the barrier weight.
  double kkt_residual = 0;
  int newton_steps = 0;
  std::string detail;               // human-readable note (e.g. infeasibility certificate)
};

struct Allocation {
  std::vector<PairKey> pairs;
  std::vector<std::vector<double>> time;    // [pair][state], seconds
  std::vector<std::vector<double>> energy;  // [pair][state], Joules

  // Expected transmission energy sum_s q_s sum_pairs e.
  double expected_energy(const std::vector<double>& state_prob) const;
};

struct ConvexSolution {
  Allocation allocation;
  std::vector<double> y;  // empty when y_count == 0
  SolverReport report;
};

// Solves the subproblem. Pure: no global state; deterministic.
// Post: on status optimal, max_primal_violation <= feasibility_tol,
// kkt_residual <= stationarity_tol, and each state's time budget is used in
// full (scaling t up never hurts: the rate is nondecreasing in t).
ConvexSolution solve_convex(const ConvexSubproblem& sp, const SolverOptions& opt = {});

}  // namespace tilecast
