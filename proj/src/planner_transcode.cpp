#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include "tilecast/planner.hpp"

namespace tilecast {

namespace {

std::vector<int> quality_by_user(const Instance& inst) {
  std::vector<int> r(inst.demands.size() + 1, 0);
  for (const auto& d : inst.demands) {
    if (d.user < 1 || d.user > static_cast<int>(inst.demands.size()))
      throw std::invalid_argument("demands must use dense 1-based user ids");
    r[d.user] = d.quality;
  }
  return r;
}

std::vector<SelectionRow> selection_rows(const Instance& inst) {
  std::vector<SelectionRow> rows;
  for (const auto& g : inst.partition.groups)
    for (int k : g.subset.ids) rows.push_back({g.subset, k});
  return rows;
}

double group_tiles(const Instance& inst, const UserSubset& s) {
  const PartitionGroup* g = inst.partition.find(s);
  if (!g) throw std::invalid_argument("selection row references a subset not in the partition");
  return static_cast<double>(g->tiles.size());
}

SelectionY one_hot_selection(const Instance& inst, const std::vector<int>& level_per_row) {
  SelectionY sel;
  sel.levels = inst.video.levels;
  sel.rows = selection_rows(inst);
  sel.y.assign(sel.rows.size() * sel.levels, 0.0);
  sel.binary = true;
  for (size_t i = 0; i < sel.rows.size(); ++i) sel.at(static_cast<int>(i), level_per_row[i]) = 1.0;
  return sel;
}

}  // namespace

int SelectionY::selected_level(int row) const {
  int best = 1;
  double best_v = at(row, 1);
  for (int l = 2; l <= levels; ++l)
    if (at(row, l) > best_v) { best_v = at(row, l); best = l; }
  return best;
}

double SelectionY::penalty() const {
  double p = 0.0;
  for (double v : y) p += v * (1.0 - v);
  return p;
}

TranscodeProblem build_transcode_problem(const Instance& inst) {
  TranscodeProblem tp;
  tp.levels = inst.video.levels;
  tp.rows = selection_rows(inst);
  tp.row_quality.resize(tp.rows.size());
  const auto r = quality_by_user(inst);
  const double beta = inst.params.beta;

  ConvexSubproblem& sub = tp.sub;
  sub.state_count = inst.channel.state_count();
  sub.state_prob = inst.channel.joint_prob;
  sub.gain = inst.channel.joint_gain;
  sub.bandwidth_hz = inst.params.bandwidth_hz;
  sub.frame_seconds = inst.params.frame_seconds;
  sub.noise_watts = inst.params.noise_watts;

  const int L = tp.levels;
  const int groups = static_cast<int>(inst.partition.groups.size());
  for (int g = 0; g < groups; ++g)
    for (int l = 1; l <= L; ++l) sub.pairs.push_back({inst.partition.groups[g].subset, l});

  sub.y_count = static_cast<int>(tp.rows.size()) * L;
  sub.y_cost.assign(sub.y_count, 0.0);
  sub.fixed_cost = 0.0;

  int row = 0;
  for (int g = 0; g < groups; ++g) {
    const auto& group = inst.partition.groups[g];
    const double tiles = static_cast<double>(group.tiles.size());
    for (int k : group.subset.ids) {
      tp.row_quality[row] = r[k];
      const double ek = inst.params.transcode_joule_per_step[k - 1];
      SimplexRow simplex;
      for (int l = 1; l <= L; ++l) {
        const int yi = tp.y_index(row, l);
        sub.rates.push_back({tp.pair_index(g, l), k - 1,
                             tiles * inst.video.encoding_rates[l - 1], yi});
        sub.y_cost[yi] = beta * tiles * ek * l;
        simplex.y_indices.push_back(yi);
      }
      sub.fixed_cost -= beta * tiles * ek * r[k];
      sub.simplex.push_back(std::move(simplex));
      if (r[k] > 1) {
        QualityRow q;
        q.rhs = r[k];
        for (int l = 1; l <= L; ++l) {
          q.y_indices.push_back(tp.y_index(row, l));
          q.coeff.push_back(l);
        }
        sub.quality.push_back(std::move(q));
      }
      ++row;
    }
  }
  return tp;
}

SelectionY exact_level_selection(const Instance& inst) {
  const auto r = quality_by_user(inst);
  const auto rows = selection_rows(inst);
  std::vector<int> level(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) level[i] = r[rows[i].user];
  return one_hot_selection(inst, level);
}

SelectionY max_required_selection(const Instance& inst) {
  const auto r = quality_by_user(inst);
  const auto rows = selection_rows(inst);
  std::vector<int> level(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    int rmax = 1;
    for (int k : rows[i].subset.ids) rmax = std::max(rmax, r[k]);
    level[i] = rmax;
  }
  return one_hot_selection(inst, level);
}

SelectionY random_feasible_y(const Instance& inst, Rng& rng) {
  const auto r = quality_by_user(inst);
  const auto rows = selection_rows(inst);
  const int L = inst.video.levels;
  std::vector<int> level(rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    level[i] = static_cast<int>(rng.uniform_int(r[rows[i].user], L));
  return one_hot_selection(inst, level);
}

double transcode_energy(const Instance& inst, const SelectionY& sel) {
  const auto r = quality_by_user(inst);
  double sum = 0.0;
  for (size_t i = 0; i < sel.rows.size(); ++i) {
    const auto& row = sel.rows[i];
    double mean_level = 0.0;
    for (int l = 1; l <= sel.levels; ++l) mean_level += l * sel.at(static_cast<int>(i), l);
    sum += group_tiles(inst, row.subset) * inst.params.transcode_joule_per_step[row.user - 1] *
           (mean_level - r[row.user]);
  }
  return sum;
}

TranscodeSolution evaluate_selection(const Instance& inst, const SelectionY& sel,
                                     const SolverOptions& opt) {
  if (!sel.binary) throw std::invalid_argument("evaluate_selection requires a binary selection");
  TranscodeProblem tp = build_transcode_problem(inst);
  if (sel.y.size() != static_cast<size_t>(tp.sub.y_count))
    throw std::invalid_argument("evaluate_selection: selection shape does not match the instance");
  ConvexSubproblem fixed = tp.sub;
  fixed.y_count = 0;
  fixed.y_cost.clear();
  fixed.simplex.clear();
  fixed.quality.clear();
  // the transcode cost is a constant here; routing it through the solver keeps
  // the report objective equal to the full plan cost
  fixed.fixed_cost = inst.params.beta * transcode_energy(inst, sel);
  fixed.rates.clear();
  for (const auto& rr : tp.sub.rates)
    if (sel.y[rr.y_index] > 0.5) fixed.rates.push_back({rr.pair, rr.user, rr.required_rate_bps, -1});

  ConvexSolution sol = solve_convex(fixed, opt);
  TranscodeSolution out;
  out.selection = sel;
  out.allocation = std::move(sol.allocation);
  out.transmission_energy = out.allocation.expected_energy(fixed.state_prob);
  out.transcode_energy = transcode_energy(inst, sel);
  out.objective = out.transmission_energy + inst.params.beta * out.transcode_energy;
  out.penalty = sel.penalty();
  out.report = sol.report;
  return out;
}

DcIterate dc_iterate(const Instance& inst, const SelectionY& current, double rho,
                     const SolverOptions& opt) {
  TranscodeProblem tp = build_transcode_problem(inst);
  if (current.y.size() != static_cast<size_t>(tp.sub.y_count))
    throw std::invalid_argument("dc_iterate: selection shape does not match the instance");
  ConvexSubproblem sub = tp.sub;
  double y0_sq = 0.0;
  for (int i = 0; i < sub.y_count; ++i) {
    sub.y_cost[i] += rho * (1.0 - 2.0 * current.y[i]);
    y0_sq += current.y[i] * current.y[i];
  }
  sub.fixed_cost += rho * y0_sq;

  ConvexSolution sol = solve_convex(sub, opt);
  DcIterate out;
  out.allocation = std::move(sol.allocation);
  out.y.levels = tp.levels;
  out.y.rows = tp.rows;
  out.y.y = std::move(sol.y);
  out.y.binary = false;
  out.objective = out.allocation.expected_energy(sub.state_prob) +
                  inst.params.beta * transcode_energy(inst, out.y) + rho * out.y.penalty();
  out.report = sol.report;
  return out;
}

namespace {

// argmax per row, ties to the lower level; levels below r_k repaired upward
SelectionY round_selection(const SelectionY& relaxed, const std::vector<int>& row_quality) {
  SelectionY out = relaxed;
  out.binary = true;
  for (size_t i = 0; i < out.rows.size(); ++i) {
    int l = relaxed.selected_level(static_cast<int>(i));
    l = std::max(l, row_quality[i]);
    for (int j = 1; j <= out.levels; ++j) out.at(static_cast<int>(i), j) = (j == l) ? 1.0 : 0.0;
  }
  return out;
}

std::vector<signed char> binary_key(const SelectionY& sel) {
  std::vector<signed char> key(sel.y.size());
  for (size_t i = 0; i < sel.y.size(); ++i) key[i] = sel.y[i] > 0.5 ? 1 : 0;
  return key;
}

int total_level(const SelectionY& sel) {
  int sum = 0;
  for (size_t i = 0; i < sel.rows.size(); ++i) sum += sel.selected_level(static_cast<int>(i));
  return sum;
}

}  // namespace

TranscodeSolution solve_transcode_dc(const Instance& inst, const DcOptions& opt) {
  const SelectionY start_bw = max_required_selection(inst);
  const SelectionY start_exact = exact_level_selection(inst);
  const std::vector<int> row_quality = [&] {
    TranscodeProblem tp = build_transcode_problem(inst);
    return tp.row_quality;
  }();

  std::vector<TranscodeSolution> cands;
  std::map<std::vector<signed char>, int> memo;
  auto eval_binary = [&](const SelectionY& sel) {
    const auto key = binary_key(sel);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const int idx = static_cast<int>(cands.size());
    cands.push_back(evaluate_selection(inst, sel, opt.solver));
    memo.emplace(key, idx);
    return idx;
  };

  std::vector<DcRestartReport> restarts;
  std::vector<int> cand_of_restart;

  auto add_direct = [&](const SelectionY& sel) {
    const int idx = eval_binary(sel);
    DcRestartReport rr;
    rr.penalty = 0.0;
    rr.rounded_binary = true;
    rr.status = cands[idx].report.status;
    rr.objective = cands[idx].objective;
    rr.accepted = rr.status == SolveStatus::optimal;
    restarts.push_back(std::move(rr));
    cand_of_restart.push_back(idx);
    return idx;
  };

  const int bw_idx = add_direct(start_bw);
  add_direct(start_exact);

  const double scale = cands[bw_idx].report.status == SolveStatus::infeasible
                           ? 1.0
                           : std::abs(cands[bw_idx].objective);
  const double rho0 = opt.rho0_factor * std::max(scale, 1e-12);

  auto descend = [&](const SelectionY& y0) {
    DcRestartReport rr;
    SelectionY y = y0;
    double rho = rho0;
    for (int phase = 0; phase <= opt.max_rho_escalations; ++phase) {
      DcPhaseTrace trace;
      trace.rho = rho;
      double prev = std::numeric_limits<double>::infinity();
      for (int it = 0; it < opt.max_iterations; ++it) {
        DcIterate step = dc_iterate(inst, y, rho, opt.solver);
        if (step.report.status == SolveStatus::infeasible) {
          rr.status = SolveStatus::infeasible;
          rr.penalty = y.penalty();
          rr.objective = std::numeric_limits<double>::infinity();
          restarts.push_back(rr);
          cand_of_restart.push_back(-1);
          return;
        }
        std::fprintf(stderr, "DCTRACE phase=%d it=%d rho=%.6e obj=%.12e status=%d kkt=%.3e viol=%.3e\n",
                     phase, it, rho, step.objective, static_cast<int>(step.report.status),
                     step.report.kkt_residual, step.report.max_primal_violation);
        // a trial whose allocation misses primal feasibility carries an
        // understated objective, and one that fails to descend means progress
        // has stalled; either way the phase ends on the previous iterate
        if (step.report.max_primal_violation > opt.solver.feasibility_tol) break;
        if (!(step.objective <= prev)) break;
        trace.objective.push_back(step.objective);
        y = std::move(step.y);
        if (prev - step.objective < opt.objective_tol * (1.0 + std::abs(step.objective))) break;
        prev = step.objective;
      }
      rr.phases.push_back(std::move(trace));
      if (y.penalty() <= opt.penalty_tol) break;
      if (phase < opt.max_rho_escalations) rho *= opt.rho_growth;
    }
    rr.penalty = y.penalty();
    if (rr.penalty > opt.penalty_tol) {
      rr.accepted = false;
      rr.status = SolveStatus::max_iterations;
      rr.objective = std::numeric_limits<double>::infinity();
      restarts.push_back(std::move(rr));
      cand_of_restart.push_back(-1);
      return;
    }
    const SelectionY rounded = round_selection(y, row_quality);
    rr.rounded_binary = true;
    const int idx = eval_binary(rounded);
    rr.status = cands[idx].report.status;
    rr.objective = cands[idx].objective;
    rr.accepted = rr.status == SolveStatus::optimal;
    restarts.push_back(std::move(rr));
    cand_of_restart.push_back(idx);
  };

  descend(start_bw);
  descend(start_exact);
  for (int r = 0; r < opt.restarts; ++r) {
    Rng rng = Rng::stream(opt.seed, {static_cast<uint64_t>(StreamTag::dc_restart),
                                     static_cast<uint64_t>(r)});
    descend(random_feasible_y(inst, rng));
  }

  // winner: lowest objective; near-ties resolved by total selected level, then
  // by lexicographic y, so reruns and thread counts cannot change the pick
  int best = -1;
  for (size_t i = 0; i < restarts.size(); ++i) {
    if (!restarts[i].accepted) continue;
    const int idx = cand_of_restart[i];
    if (best < 0) { best = static_cast<int>(i); continue; }
    const int bidx = cand_of_restart[best];
    const double a = cands[idx].objective, b = cands[bidx].objective;
    if (a < b - 1e-9 * (1.0 + std::min(std::abs(a), std::abs(b)))) {
      best = static_cast<int>(i);
    } else if (std::abs(a - b) <= 1e-9 * (1.0 + std::min(std::abs(a), std::abs(b)))) {
      const int ta = total_level(cands[idx].selection), tb = total_level(cands[bidx].selection);
      if (ta < tb || (ta == tb && cands[idx].selection.y < cands[bidx].selection.y))
        best = static_cast<int>(i);
    }
  }

  TranscodeSolution out;
  if (best >= 0) {
    out = cands[cand_of_restart[best]];
    out.chosen_restart = best;
  } else {
    // every restart failed; surface the exact-level evaluation as best effort
    out = cands[cand_of_restart[1]];
    out.chosen_restart = -1;
    out.report.status = SolveStatus::max_iterations;
  }
  out.restarts = std::move(restarts);
  return out;
}

}  // namespace tilecast
