#include "tilecast/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace tilecast {

UserSubset::UserSubset(std::vector<int> v) : ids(std::move(v)) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

bool UserSubset::contains(int user) const {
  return std::binary_search(ids.begin(), ids.end(), user);
}

std::string UserSubset::to_string() const {
  std::string s = "{";
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s + "}";
}

bool operator<(const UserSubset& a, const UserSubset& b) {
  if (a.ids.size() != b.ids.size()) return a.ids.size() < b.ids.size();
  return a.ids < b.ids;
}

const PartitionGroup* Partition::find(const UserSubset& s) const {
  for (const auto& g : groups)
    if (g.subset == s) return &g;
  return nullptr;
}

std::vector<UserSubset> Partition::index() const {
  std::vector<UserSubset> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.subset);
  return out;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.location << ": " << v.message << "\n";
  return os.str();
}

namespace {

void add(ValidationReport& r, std::string loc, std::string msg) {
  r.violations.push_back({std::move(loc), std::move(msg)});
}

bool tile_in_grid(const TileIndex& t, const VideoConfig& v) {
  return t.row >= 1 && t.row <= v.rows && t.col >= 1 && t.col <= v.cols;
}

}  // namespace

ValidationReport validate_instance(const Instance& inst) {
  ValidationReport r;
  const auto& v = inst.video;

  if (v.rows < 1) add(r, "video.rows", "must be >= 1");
  if (v.cols < 1) add(r, "video.cols", "must be >= 1");
  if (v.levels < 1) add(r, "video.levels", "must be >= 1");
  if (static_cast<int>(v.encoding_rates.size()) != v.levels) {
    add(r, "video.encoding_rates", "size must equal levels");
  } else {
    for (int l = 0; l < v.levels; ++l) {
      if (!(v.encoding_rates[l] > 0.0)) {
        add(r, "video.encoding_rates", "rate " + std::to_string(l + 1) + " must be positive");
      }
      if (l > 0 && !(v.encoding_rates[l] > v.encoding_rates[l - 1])) {
        add(r, "video.encoding_rates",
            "must be strictly increasing (D[" + std::to_string(l + 1) + "] <= D[" + std::to_string(l) + "])");
      }
    }
  }

  const int K = inst.user_count();
  if (K < 1) add(r, "demands", "must be nonempty");
  std::set<int> seen_ids;
  for (int i = 0; i < K; ++i) {
    const auto& d = inst.demands[i];
    const std::string loc = "demands[" + std::to_string(i) + "]";
    if (d.user < 1 || d.user > K) add(r, loc + ".user", "id must be in 1..K");
    if (!seen_ids.insert(d.user).second) add(r, loc + ".user", "duplicate id");
    if (d.quality < 1 || d.quality > v.levels) add(r, loc + ".quality", "must be in 1..levels");
    if (d.tiles.empty()) add(r, loc + ".tiles", "FoV tile set must be nonempty");
    for (const auto& t : d.tiles) {
      if (!tile_in_grid(t, v)) {
        add(r, loc + ".tiles", "tile (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside grid");
        break;
      }
    }
    if (!std::is_sorted(d.tiles.begin(), d.tiles.end())) add(r, loc + ".tiles", "must be sorted ascending");
    if (std::adjacent_find(d.tiles.begin(), d.tiles.end()) != d.tiles.end()) add(r, loc + ".tiles", "contains duplicates");
  }

  const auto& ch = inst.channel;
  if (ch.user_count() != K) add(r, "channel.users", "must have one marginal per user");
  for (int k = 0; k < ch.user_count(); ++k) {
    const auto& u = ch.users[k];
    const std::string loc = "channel.users[" + std::to_string(k) + "]";
    if (u.gains.empty()) add(r, loc + ".gains", "must be nonempty");
    if (u.gains.size() != u.probs.size()) add(r, loc, "gains and probs must have equal size");
    double sum = 0.0;
    for (double p : u.probs) {
      if (!(p >= 0.0)) add(r, loc + ".probs", "must be nonnegative");
      sum += p;
    }
    if (!u.probs.empty() && std::abs(sum - 1.0) > 1e-12) add(r, loc + ".probs", "must sum to 1");
    std::set<double> distinct;
    for (double g : u.gains) {
      if (!(g > 0.0)) add(r, loc + ".gains", "must be positive");
      if (!distinct.insert(g).second) add(r, loc + ".gains", "must be distinct");
    }
  }
  // Joint enumeration must be the full product of the marginals, in the
  // canonical order (user 1 slowest digit).
  {
    size_t expect = 1;
    bool sizes_ok = ch.user_count() == K;
    for (const auto& u : ch.users) {
      if (u.gains.empty() || u.gains.size() != u.probs.size()) sizes_ok = false;
      expect *= std::max<size_t>(1, u.gains.size());
    }
    if (sizes_ok) {
      if (ch.joint_prob.size() != expect || ch.joint_gain.size() != static_cast<size_t>(K)) {
        add(r, "channel.joint", "enumeration missing or wrong size; expected full product space");
      } else {
        bool mismatch = false;
        for (int k = 0; k < K && !mismatch; ++k)
          if (ch.joint_gain[k].size() != expect) mismatch = true;
        std::vector<size_t> digit(K, 0);
        for (size_t s = 0; s < expect && !mismatch; ++s) {
          double p = 1.0;
          for (int k = 0; k < K; ++k) {
            const auto& u = ch.users[k];
            p *= u.probs[digit[k]];
            if (ch.joint_gain[k][s] != u.gains[digit[k]]) mismatch = true;
          }
          if (std::abs(ch.joint_prob[s] - p) > 1e-12 * (1.0 + std::abs(p))) mismatch = true;
          for (int k = K - 1; k >= 0; --k) {  // user K is the fastest digit
            if (++digit[k] < ch.users[k].gains.size()) break;
            digit[k] = 0;
          }
        }
        if (mismatch) add(r, "channel.joint", "enumeration is not the product of the marginals");
      }
    }
  }

  const auto& p = inst.params;
  if (!(p.bandwidth_hz > 0.0)) add(r, "params.bandwidth_hz", "must be positive");
  if (!(p.frame_seconds > 0.0)) add(r, "params.frame_seconds", "must be positive");
  if (!(p.noise_watts > 0.0)) add(r, "params.noise_watts", "must be positive");
  if (static_cast<int>(p.transcode_joule_per_step.size()) != K) {
    add(r, "params.transcode_joule_per_step", "size must equal user count");
  } else {
    for (double e : p.transcode_joule_per_step)
      if (!(e >= 0.0)) add(r, "params.transcode_joule_per_step", "must be nonnegative");
  }
  if (!(p.beta >= 1.0)) add(r, "params.beta", "must be >= 1");

  // Partition laws: disjoint groups, exact owner sets, coverage of union(G_k),
  // nonempty groups, subsets drawn from the demand users.
  {
    std::map<TileIndex, std::vector<int>> owners;
    for (const auto& d : inst.demands)
      for (const auto& t : d.tiles) owners[t].push_back(d.user);
    std::map<TileIndex, UserSubset> expected;
    for (auto& [t, ids] : owners) expected[t] = UserSubset(ids);

    std::set<TileIndex> seen;
    for (size_t gi = 0; gi < inst.partition.groups.size(); ++gi) {
      const auto& g = inst.partition.groups[gi];
      const std::string loc = "partition.groups[" + std::to_string(gi) + "]";
      if (g.tiles.empty()) add(r, loc, "group must be nonempty");
      if (g.subset.ids.empty()) add(r, loc, "subset must be nonempty");
      for (const auto& t : g.tiles) {
        if (!seen.insert(t).second) add(r, loc, "tile appears in more than one group");
        auto it = expected.find(t);
        if (it == expected.end()) {
          add(r, loc, "tile (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") not demanded by anyone");
        } else if (!(it->second == g.subset)) {
          add(r, loc, "tile (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                          ") owner set is " + it->second.to_string() + ", group says " + g.subset.to_string());
        }
      }
    }
    if (seen.size() != expected.size())
      add(r, "partition", "does not cover the union of the demanded tiles");
  }

  return r;
}

}  // namespace tilecast
