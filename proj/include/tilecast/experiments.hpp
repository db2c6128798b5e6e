#pragma once

// Monte-Carlo sweeps over one scenario parameter, comparing the four schemes'
// expected energy per frame:
//   proposed_wo  multicast planning without transcoding
//   proposed_w   multicast planning with transcoding (DC selection)
//   baseline_wo  per-user unicast at the required level
//   baseline_w   multicast at the per-group maximum required level
// Each (value, realization) pair is one task: the instance is sampled once and
// every scheme runs on it, so schemes are paired sample-by-sample. Cells keep
// mean and standard error over the realizations whose solve reported optimal.

#include <string>
#include <vector>

#include "tilecast/planner.hpp"
#include "tilecast/scenario.hpp"

namespace tilecast {

enum class SweepParam { users, zipf_gamma, mean_quality };
enum class Scheme { proposed_wo, proposed_w, baseline_wo, baseline_w };

// CSV names: "K", "gamma", "rbar"
std::string to_string(SweepParam p);
std::string to_string(Scheme s);
SweepParam parse_sweep_param(const std::string& name);
Scheme parse_scheme(const std::string& name);

std::vector<Scheme> all_schemes();

struct SweepSpec {
  SweepParam param = SweepParam::users;
  std::vector<double> values;
  ScenarioConfig base;
  std::vector<Scheme> schemes = all_schemes();
  DcOptions dc;  // seed is ignored; re-derived per realization from base.seed
};

struct SweepCell {
  double value = 0.0;
  Scheme scheme = Scheme::proposed_wo;
  double mean_energy_j = 0.0;  // over realizations whose solve reported optimal
  double stderr_j = 0.0;       // sample stddev / sqrt(n_ok); 0 when n_ok < 2
  int n_ok = 0;
  int n_total = 0;
};

struct SweepResult {
  SweepParam param = SweepParam::users;
  std::vector<SweepCell> cells;  // values in spec order, schemes in spec order
};

// One sweep value applied to the base config: users sets K, zipf_gamma sets the
// popularity skew, mean_quality rbar sets r_lb = rbar-1 and r_ub = rbar+1.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepParam param, double value);

// Splits (value, realization) tasks across TILECAST_THREADS threads (default:
// hardware concurrency). Every task writes its own preallocated slot and
// aggregation is sequential, so the result is independent of the thread count.
SweepResult run_sweep(const SweepSpec& spec);

// Header `param,value,scheme,mean_energy_j,stderr_j,n_ok,n_total`, one row per
// cell, numbers printed shortest-round-trip within 9 significant digits.
std::string to_csv(const SweepResult& result);

}  // namespace tilecast
