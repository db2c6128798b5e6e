#pragma once

// Randomized instance generation for the simulation sweeps: five candidate
// viewing directions sampled by Zipf popularity, uniform quality requirements
// in {r_lb..r_ub}, two-state per-user channels expanded to the product joint
// space, and the default video/system constants.
//
// Determinism contract: every random quantity comes from a counter-based
// stream keyed by (master seed, purpose tag, realization index, user index),
// so realization i is bit-identical no matter the order or thread realizations
// are generated in, and user u's draws do not change when K or gamma changes
// (which is what makes paired sweeps meaningful).

#include <cstdint>
#include <vector>

#include "tilecast/types.hpp"

namespace tilecast {

struct ViewingDirection {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

// Five equatorial centers 20 degrees apart; with the padded 120x120 FoV each
// pair of adjacent directions overlaps, so multi-user groups actually occur.
// Popularity rank = catalog order by default.
std::vector<ViewingDirection> default_catalog();
VideoConfig default_video();  // 18x36 grid, 5 levels, per-tile rates in bits/s

struct ScenarioConfig {
  int users = 3;
  double zipf_gamma = 0.0;
  int r_lb = 1;
  int r_ub = 5;
  std::vector<ViewingDirection> catalog = default_catalog();
  std::vector<int> popularity_rank = {1, 2, 3, 4, 5};  // rank of catalog[i]
  VideoConfig video = default_video();
  double bandwidth_hz = 150e6;
  double frame_seconds = 0.05;
  double noise_watts = 150e6 * 1.38e-23 * 300.0;  // B * k_B * T_0
  double transcode_joule_per_step = 1e-6;         // E_k, same for every user
  double beta = 1.0;
  UserChannel user_channel{{1e-6, 2e-6}, {0.5, 0.5}};
  double fov_horizontal_deg = 100.0;
  double fov_vertical_deg = 100.0;
  double fov_margin_deg = 10.0;
  int realizations = 100;
  std::uint64_t seed = 0;
};

struct Realization {
  std::vector<int> vd_index;  // per user, 0-based index into the catalog
  std::vector<int> quality;   // per user r_k
  Instance instance;
};

// p_c proportional to c^(-gamma), c = 1..count. Throws on gamma < 0, count < 1.
std::vector<double> zipf_probabilities(double gamma, int count);

// Full product enumeration of independent per-user marginals. The last user is
// the fastest-varying digit. Throws when K > 8 (state count is |H|^K).
ChannelModel joint_channel_states(const std::vector<UserChannel>& marginals);

// Deterministic in (cfg.seed, index). The returned instance passes
// validate_instance; throws std::logic_error otherwise.
Realization sample_realization(const ScenarioConfig& cfg, int index);

}  // namespace tilecast
