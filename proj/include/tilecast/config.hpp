#pragma once

// Strict JSON loading for instances, scenarios, sweeps and solver options.
// Unknown keys are rejected with their dotted path ($.video.rows style), type
// mismatches name the offending key, and parse errors keep the byte position.
// Instance files carry per-user channel marginals only; the joint state space
// and the tile partition are rebuilt on load.

#include <stdexcept>
#include <string>
#include <vector>

#include "tilecast/convex.hpp"
#include "tilecast/experiments.hpp"
#include "tilecast/planner.hpp"
#include "tilecast/scenario.hpp"
#include "tilecast/types.hpp"

namespace tilecast {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full instance: video, demands, channel.users, params. Derives joint states
// and partition; does not run validate_instance (callers decide how to report).
Instance load_instance(const std::string& json_text);

// Inverse of load_instance up to the derived members. Stable key order and
// shortest round-trip numbers, so save/load/save is byte-identical.
std::string save_instance(const Instance& inst);

// video + demands only; accepts full instance files (channel/params ignored).
struct DemandFile {
  VideoConfig video;
  std::vector<UserDemand> demands;
};
DemandFile load_demands(const std::string& json_text);

// Every key optional; defaults are the ScenarioConfig initializers. If catalog
// is given without popularity_rank, ranks default to catalog order.
ScenarioConfig load_scenario(const std::string& json_text);

// {"param": "K"|"gamma"|"rbar", "values": [...], "base": {scenario},
//  "schemes": [...], "dc": {dc options}}; only param and values are required.
SweepSpec load_sweep(const std::string& json_text);

// {"solver": {...}, "dc": {...}}, both optional. solver drives single convex
// solves; dc (with its nested solver) drives the DC selection search.
struct RunOptions {
  SolverOptions solver;
  DcOptions dc;
};
RunOptions load_run_options(const std::string& json_text);

}  // namespace tilecast
