#pragma once

// Planners for the two service modes.
//
// Without transcoding, each user k must receive the tiles of its groups at
// exactly level r_k; users of a group sharing a level share one stream, so the
// allocation problem is convex and solved directly.
//
// With transcoding, each (group, member) chooses a received level >= r_k via
// selection variables y and converts down locally at E_k per tile per level
// step. The binary selection is found by penalized DC: relax y to [0,1], add
// rho * sum y(1-y), linearize the concave part at the previous iterate, and
// descend (majorization-minimization). Restarts: the max-required selection
// (the baseline-w start), the exact-level selection (whose fixed allocation
// is the no-transcode problem, so the returned objective never exceeds E*),
// and R random feasible starts. Both deterministic starts also enter the
// candidate pool directly, which makes those two upper bounds hold by
// construction rather than by descent luck.

#include <cstdint>
#include <string>
#include <vector>

#include "tilecast/convex.hpp"
#include "tilecast/rng.hpp"
#include "tilecast/types.hpp"

namespace tilecast {

struct NoTranscodeSolution {
  Allocation allocation;
  double objective = 0.0;  // E*, Joules per frame (expected transmission energy)
  SolverReport report;
};

// Pairs (S, l) restricted to demanded levels l in {r_k : k in S}; one rate row
// per (S, k) on pair (S, r_k) with required bits/s |P_S| * D_{r_k}. No y block.
ConvexSubproblem build_no_transcode_subproblem(const Instance& inst);

NoTranscodeSolution solve_no_transcode(const Instance& inst, const SolverOptions& opt = {});

// Selection variables y_{S,k,l}. Rows are the (group, member) slots in
// canonical order: groups as stored in the partition, members ascending.
struct SelectionRow {
  UserSubset subset;
  int user = 0;  // 1-based, member of subset
};

struct SelectionY {
  int levels = 0;
  std::vector<SelectionRow> rows;
  std::vector<double> y;  // row-major, y[row * levels + (l-1)]
  bool binary = false;

  double at(int row, int level) const { return y[row * levels + (level - 1)]; }
  double& at(int row, int level) { return y[row * levels + (level - 1)]; }

  // sum over rows of the level with the largest mass; ties go to the lower
  // level so rounding never invents transcoding work
  int selected_level(int row) const;
  double penalty() const;  // sum y(1-y), 0 iff binary
};

// One selection row per (group, member); y free over all L levels.
// Rate rows are y-scaled; quality rows sum l*y >= r_k (omitted when r_k = 1).
struct TranscodeProblem {
  ConvexSubproblem sub;
  std::vector<SelectionRow> rows;
  std::vector<int> row_quality;  // r_k per row
  int levels = 0;

  int y_index(int row, int level) const { return row * levels + (level - 1); }
  int pair_index(int group, int level) const { return group * levels + (level - 1); }
};

TranscodeProblem build_transcode_problem(const Instance& inst);

// level r_k for every row: zero transcoding, allocation equals no-transcode
SelectionY exact_level_selection(const Instance& inst);
// level max_{k in S} r_k for every row of S: the baseline-w selection
SelectionY max_required_selection(const Instance& inst);
// one-hot with level uniform on {r_k..L} per row
SelectionY random_feasible_y(const Instance& inst, Rng& rng);

// Joules for converting every row's selected mass down to r_k (unweighted).
double transcode_energy(const Instance& inst, const SelectionY& sel);

struct DcOptions {
  int restarts = 10;             // random starts beyond the two deterministic ones
  int max_iterations = 100;      // per rho phase
  int max_rho_escalations = 5;   // rho multiplied by rho_growth this many times at most
  double rho_growth = 10.0;
  double rho0_factor = 0.1;      // rho0 = factor * baseline-w objective
  double objective_tol = 1e-6;   // relative descent progress floor
  double penalty_tol = 1e-6;     // candidate acceptance threshold
  uint64_t seed = 0;             // restart RNG stream root
  SolverOptions solver;
};

struct DcPhaseTrace {
  double rho = 0.0;
  std::vector<double> objective;  // true penalized objective per iteration
};

struct DcRestartReport {
  std::vector<DcPhaseTrace> phases;  // empty for direct (no-descent) candidates
  double penalty = 0.0;              // of the relaxed point before rounding
  bool accepted = false;             // penalty <= tol, rounded and re-solved
  bool rounded_binary = false;
  SolveStatus status = SolveStatus::max_iterations;  // of the fixed-y re-solve
  double objective = 0.0;            // Ē of the candidate; meaningful when accepted
};

struct TranscodeSolution {
  SelectionY selection;  // binary
  Allocation allocation;
  double transmission_energy = 0.0;  // Joules, expected over states
  double transcode_energy = 0.0;     // Joules, unweighted
  double objective = 0.0;            // Ē = transmission + beta * transcode
  double penalty = 0.0;  // of `selection`; 0 by construction
  // Slot order: 0 and 1 are the direct evaluations of the max-required and
  // exact-level selections (no phases), 2 and 3 the descents from those two
  // starts, then one slot per random restart.
  std::vector<DcRestartReport> restarts;
  int chosen_restart = -1;
  SolverReport report;  // of the winning fixed-y solve
};

// Fixes a binary selection and solves the remaining allocation. The result has
// no restarts; objective is recomputed from its transmission and transcoding
// parts. Also the engine behind solve_baseline_max_quality.
TranscodeSolution evaluate_selection(const Instance& inst, const SelectionY& sel,
                                     const SolverOptions& opt = {});

// One DC step from `current` (feasible for simplex/quality/box) at weight rho:
// solves the linearized problem and returns the next iterate plus the true
// penalized objective f(y) + rho*P(y) at it (not the linearized surrogate).
struct DcIterate {
  Allocation allocation;
  SelectionY y;
  double objective = 0.0;
  SolverReport report;
};
DcIterate dc_iterate(const Instance& inst, const SelectionY& current, double rho,
                     const SolverOptions& opt = {});

TranscodeSolution solve_transcode_dc(const Instance& inst, const DcOptions& opt = {});

}  // namespace tilecast
