#pragma once

// The two comparison schemes. Unicast serves every user separately at its own
// level across its whole FoV, sharing only the per-state time budget, and is
// invariant to how the FoVs overlap. Max-quality multicasts each group once at
// the group's highest required level and lets lower-requirement members
// transcode down.

#include "tilecast/planner.hpp"
#include "tilecast/types.hpp"

namespace tilecast {

NoTranscodeSolution solve_baseline_unicast(const Instance& inst, const SolverOptions& opt = {});

TranscodeSolution solve_baseline_max_quality(const Instance& inst, const SolverOptions& opt = {});

}  // namespace tilecast
