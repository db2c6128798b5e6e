#include "tilecast/baselines.hpp"

namespace tilecast {

NoTranscodeSolution solve_baseline_unicast(const Instance& inst, const SolverOptions& opt) {
  ConvexSubproblem sub;
  sub.state_count = inst.channel.state_count();
  sub.state_prob = inst.channel.joint_prob;
  sub.gain = inst.channel.joint_gain;
  sub.bandwidth_hz = inst.params.bandwidth_hz;
  sub.frame_seconds = inst.params.frame_seconds;
  sub.noise_watts = inst.params.noise_watts;

  // one private stream per user; shared tiles are transmitted once per owner
  for (const auto& d : inst.demands) {
    const int pair = static_cast<int>(sub.pairs.size());
    sub.pairs.push_back({UserSubset({d.user}), d.quality});
    sub.rates.push_back({pair, d.user - 1,
                         static_cast<double>(d.tiles.size()) *
                             inst.video.encoding_rates[d.quality - 1],
                         -1});
  }

  ConvexSolution sol = solve_convex(sub, opt);
  NoTranscodeSolution out;
  out.allocation = std::move(sol.allocation);
  out.objective = out.allocation.expected_energy(sub.state_prob);
  out.report = sol.report;
  return out;
}

TranscodeSolution solve_baseline_max_quality(const Instance& inst, const SolverOptions& opt) {
  return evaluate_selection(inst, max_required_selection(inst), opt);
}

}  // namespace tilecast
