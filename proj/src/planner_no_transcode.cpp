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

}  // namespace

ConvexSubproblem build_no_transcode_subproblem(const Instance& inst) {
  ConvexSubproblem sub;
  sub.state_count = inst.channel.state_count();
  sub.state_prob = inst.channel.joint_prob;
  sub.gain = inst.channel.joint_gain;
  sub.bandwidth_hz = inst.params.bandwidth_hz;
  sub.frame_seconds = inst.params.frame_seconds;
  sub.noise_watts = inst.params.noise_watts;

  const auto r = quality_by_user(inst);
  for (const auto& group : inst.partition.groups) {
    // one pair per demanded level, shared by every member requiring it
    std::map<int, int> pair_of_level;
    for (int k : group.subset.ids) {
      const int l = r[k];
      if (!pair_of_level.count(l)) {
        pair_of_level[l] = static_cast<int>(sub.pairs.size());
        sub.pairs.push_back({group.subset, l});
      }
    }
    const double tiles = static_cast<double>(group.tiles.size());
    for (int k : group.subset.ids) {
      const int l = r[k];
      sub.rates.push_back({pair_of_level[l], k - 1,
                           tiles * inst.video.encoding_rates[l - 1], -1});
    }
  }
  return sub;
}

NoTranscodeSolution solve_no_transcode(const Instance& inst, const SolverOptions& opt) {
  const ConvexSubproblem sub = build_no_transcode_subproblem(inst);
  ConvexSolution sol = solve_convex(sub, opt);
  NoTranscodeSolution out;
  out.allocation = std::move(sol.allocation);
  out.objective = out.allocation.expected_energy(sub.state_prob);
  out.report = sol.report;
  return out;
}

}  // namespace tilecast
