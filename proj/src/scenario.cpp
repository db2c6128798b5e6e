#include "tilecast/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tilecast/partition.hpp"
#include "tilecast/rng.hpp"

namespace tilecast {

std::vector<ViewingDirection> default_catalog() {
  return {{0.0, 140.0}, {0.0, 160.0}, {0.0, 180.0}, {0.0, 200.0}, {0.0, 220.0}};
}

VideoConfig default_video() {
  return {18, 36, 5, {6.66e5, 16.18e5, 24.29e5, 32.01e5, 40.23e5}};
}

std::vector<double> zipf_probabilities(double gamma, int count) {
  if (gamma < 0.0) throw std::invalid_argument("zipf_probabilities: gamma must be nonnegative");
  if (count < 1) throw std::invalid_argument("zipf_probabilities: count must be positive");
  std::vector<double> p(count);
  double norm = 0.0;
  for (int c = 1; c <= count; ++c) norm += std::pow(c, -gamma);
  for (int c = 1; c <= count; ++c) p[c - 1] = std::pow(c, -gamma) / norm;
  return p;
}

ChannelModel joint_channel_states(const std::vector<UserChannel>& marginals) {
  const int k_count = static_cast<int>(marginals.size());
  if (k_count < 1) throw std::invalid_argument("joint_channel_states: need at least one user");
  if (k_count > 8)
    throw std::invalid_argument("joint_channel_states: more than 8 users (joint space is |H|^K)");
  long long total = 1;
  for (const auto& m : marginals) {
    if (m.gains.empty() || m.gains.size() != m.probs.size())
      throw std::invalid_argument("joint_channel_states: malformed marginal");
    total *= static_cast<long long>(m.gains.size());
  }

  ChannelModel out;
  out.users = marginals;
  out.joint_prob.assign(total, 1.0);
  out.joint_gain.assign(k_count, std::vector<double>(total, 0.0));
  // last user is the fastest digit of the mixed-radix state index
  std::vector<long long> stride(k_count, 1);
  for (int k = k_count - 2; k >= 0; --k)
    stride[k] = stride[k + 1] * static_cast<long long>(marginals[k + 1].gains.size());
  for (long long s = 0; s < total; ++s) {
    for (int k = 0; k < k_count; ++k) {
      const auto n = static_cast<long long>(marginals[k].gains.size());
      const auto digit = (s / stride[k]) % n;
      out.joint_prob[s] *= marginals[k].probs[digit];
      out.joint_gain[k][s] = marginals[k].gains[digit];
    }
  }
  return out;
}

Realization sample_realization(const ScenarioConfig& cfg, int index) {
  const int n_vd = static_cast<int>(cfg.catalog.size());
  if (cfg.users < 1) throw std::invalid_argument("scenario: users must be positive");
  if (n_vd < 1) throw std::invalid_argument("scenario: empty viewing-direction catalog");
  if (cfg.popularity_rank.size() != cfg.catalog.size())
    throw std::invalid_argument("scenario: popularity_rank size mismatch");
  if (cfg.r_lb < 1 || cfg.r_ub > cfg.video.levels || cfg.r_lb > cfg.r_ub)
    throw std::invalid_argument("scenario: quality bounds out of range");

  // rank c (1-based popularity) -> catalog position
  std::vector<int> rank_to_index(n_vd, -1);
  for (int j = 0; j < n_vd; ++j) {
    const int rank = cfg.popularity_rank[j];
    if (rank < 1 || rank > n_vd || rank_to_index[rank - 1] != -1)
      throw std::invalid_argument("scenario: popularity_rank must be a permutation of 1..n");
    rank_to_index[rank - 1] = j;
  }

  const std::vector<double> probs = zipf_probabilities(cfg.zipf_gamma, n_vd);

  Realization out;
  out.vd_index.resize(cfg.users);
  out.quality.resize(cfg.users);
  std::vector<UserDemand> demands(cfg.users);
  for (int u = 1; u <= cfg.users; ++u) {
    Rng vd_rng = Rng::stream(cfg.seed, {static_cast<uint64_t>(StreamTag::viewing_direction),
                                        static_cast<uint64_t>(index), static_cast<uint64_t>(u)});
    const int rank = vd_rng.discrete(probs);
    const int j = rank_to_index[rank];
    Rng q_rng = Rng::stream(cfg.seed, {static_cast<uint64_t>(StreamTag::quality),
                                       static_cast<uint64_t>(index), static_cast<uint64_t>(u)});
    const int r = q_rng.uniform_int(cfg.r_lb, cfg.r_ub);

    out.vd_index[u - 1] = j;
    out.quality[u - 1] = r;
    FovSpec fov{cfg.catalog[j].lat_deg, cfg.catalog[j].lon_deg, cfg.fov_horizontal_deg,
                cfg.fov_vertical_deg, cfg.fov_margin_deg};
    demands[u - 1] = {u, r, tiles_for_fov(fov, cfg.video)};
  }

  Instance& inst = out.instance;
  inst.video = cfg.video;
  inst.demands = std::move(demands);
  inst.channel = joint_channel_states(std::vector<UserChannel>(cfg.users, cfg.user_channel));
  inst.params.bandwidth_hz = cfg.bandwidth_hz;
  inst.params.frame_seconds = cfg.frame_seconds;
  inst.params.noise_watts = cfg.noise_watts;
  inst.params.transcode_joule_per_step.assign(cfg.users, cfg.transcode_joule_per_step);
  inst.params.beta = cfg.beta;
  inst.partition = compute_partition(inst.demands);

  const ValidationReport rep = validate_instance(inst);
  if (!rep.ok()) throw std::logic_error("scenario produced an invalid instance:\n" + rep.to_string());
  return out;
}

}  // namespace tilecast
