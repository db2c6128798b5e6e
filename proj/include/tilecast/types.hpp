#pragma once

// Core model types for multicast planning of multi-quality tiled 360 video.
// Conventions used throughout:
//   - tile indices are 1-based: row in 1..rows (top row = 1), col in 1..cols
//   - quality levels are 1-based: 1..levels, encoding rates strictly increasing
//   - user ids are 1-based: 1..K, dense
//   - physical units: Hz, seconds, Watts, Joules, bits/s

#include <cstdint>
#include <string>
#include <vector>

namespace tilecast {

struct TileIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const TileIndex&, const TileIndex&) = default;
  friend auto operator<=>(const TileIndex&, const TileIndex&) = default;
};

struct VideoConfig {
  int rows = 0;
  int cols = 0;
  int levels = 0;
  std::vector<double> encoding_rates;  // bits/s per tile, one per level, strictly increasing

  int tile_count() const { return rows * cols; }
  friend bool operator==(const VideoConfig&, const VideoConfig&) = default;
};

struct UserDemand {
  int user = 0;                  // 1-based id
  int quality = 0;               // required level r_k, 1..levels
  std::vector<TileIndex> tiles;  // FoV tile set G_k, sorted ascending, unique
  friend bool operator==(const UserDemand&, const UserDemand&) = default;
};

// Per-user fading marginal. Gains are distinct positive reals; probs sum to 1.
struct UserChannel {
  std::vector<double> gains;
  std::vector<double> probs;
  friend bool operator==(const UserChannel&, const UserChannel&) = default;
};

// Joint channel model over K users. The joint state space is the full product
// of the per-user marginals (independent fading); it is enumerated explicitly
// because every rate constraint takes an expectation over it.
struct ChannelModel {
  std::vector<UserChannel> users;

  // Enumerated product space. gain[k][s] is user k's gain in joint state s,
  // prob[s] the joint probability. Built by joint_channel_states().
  std::vector<double> joint_prob;
  std::vector<std::vector<double>> joint_gain;  // K rows, state_count() cols

  int user_count() const { return static_cast<int>(users.size()); }
  int state_count() const { return static_cast<int>(joint_prob.size()); }
  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

struct SystemParams {
  double bandwidth_hz = 0.0;      // B
  double frame_seconds = 0.0;     // T
  double noise_watts = 0.0;       // n0
  std::vector<double> transcode_joule_per_step;  // E_k, per tile per level step
  double beta = 1.0;              // weight of transcoding energy in the objective
  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

// Canonical user subset: sorted unique 1-based ids. Ordering is size-major then
// lexicographic so printed partitions are stable.
struct UserSubset {
  std::vector<int> ids;

  UserSubset() = default;
  explicit UserSubset(std::vector<int> v);

  bool contains(int user) const;
  int size() const { return static_cast<int>(ids.size()); }
  std::string to_string() const;  // "{1,3}"

  friend bool operator==(const UserSubset&, const UserSubset&) = default;
  friend bool operator<(const UserSubset& a, const UserSubset& b);
};

// Partition of the union FoV: P_S = tiles wanted by exactly the users in S.
// Only nonempty groups are stored; `index` is the set I of their subsets.
struct PartitionGroup {
  UserSubset subset;
  std::vector<TileIndex> tiles;  // sorted ascending
  friend bool operator==(const PartitionGroup&, const PartitionGroup&) = default;
};

struct Partition {
  std::vector<PartitionGroup> groups;  // sorted by subset

  const PartitionGroup* find(const UserSubset& s) const;
  std::vector<UserSubset> index() const;
  friend bool operator==(const Partition&, const Partition&) = default;
};

struct Instance {
  VideoConfig video;
  std::vector<UserDemand> demands;
  ChannelModel channel;
  SystemParams params;
  Partition partition;  // derived from demands; kept explicit and re-validated

  int user_count() const { return static_cast<int>(demands.size()); }
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Violation {
  std::string location;  // dotted path, e.g. "video.encoding_rates"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_instance(const Instance& inst);

}  // namespace tilecast
