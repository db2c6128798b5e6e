#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tilecast/config.hpp"
#include "tilecast/convex.hpp"
#include "tilecast/partition.hpp"
#include "tilecast/scenario.hpp"
#include "tilecast/types.hpp"

using namespace tilecast;

namespace {

Instance make_valid() {
  Instance inst;
  inst.video = {2, 2, 2, {1e5, 2e5}};
  inst.demands = {
      {1, 1, {{1, 1}, {1, 2}}},
      {2, 2, {{1, 2}, {2, 2}}},
  };
  UserChannel uc{{1e-6, 2e-6}, {0.5, 0.5}};
  inst.channel = joint_channel_states({uc, uc});
  inst.params = {1e6, 0.05, 1e-12, {1e-6, 1e-6}, 1.0};
  inst.partition = compute_partition(inst.demands);
  return inst;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool has(const ValidationReport& r, const std::string& loc, const std::string& msg_part) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) {
    return v.location == loc && v.message.find(msg_part) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("validate_instance: accepts a well-formed instance and the shipped example") {
  CHECK(validate_instance(make_valid()).ok());
  const Instance ex = load_instance(read_file(std::string(TILECAST_DATA_DIR) + "/example1.json"));
  const auto rep = validate_instance(ex);
  INFO(rep.to_string());
  CHECK(rep.ok());
}

TEST_CASE("validate_instance: flags bad video configuration") {
  {
    Instance i = make_valid();
    i.video.encoding_rates = {2e5, 1e5};
    CHECK(has(validate_instance(i), "video.encoding_rates", "must be strictly increasing"));
  }
  {
    Instance i = make_valid();
    i.video.encoding_rates = {1e5, 1e5};
    CHECK(has(validate_instance(i), "video.encoding_rates", "must be strictly increasing (D[2] <= D[1])"));
  }
  {
    Instance i = make_valid();
    i.video.encoding_rates = {-1.0, 2e5};
    CHECK(has(validate_instance(i), "video.encoding_rates", "rate 1 must be positive"));
  }
  {
    Instance i = make_valid();
    i.video.encoding_rates.push_back(3e5);
    CHECK(has(validate_instance(i), "video.encoding_rates", "size must equal levels"));
  }
  {
    Instance i = make_valid();
    i.video.rows = 0;
    CHECK(has(validate_instance(i), "video.rows", "must be >= 1"));
  }
}

TEST_CASE("validate_instance: flags bad demands") {
  {
    Instance i = make_valid();
    i.demands[1].user = 7;
    CHECK(has(validate_instance(i), "demands[1].user", "id must be in 1..K"));
  }
  {
    Instance i = make_valid();
    i.demands[1].user = 1;
    CHECK(has(validate_instance(i), "demands[1].user", "duplicate id"));
  }
  {
    Instance i = make_valid();
    i.demands[0].quality = 3;
    CHECK(has(validate_instance(i), "demands[0].quality", "must be in 1..levels"));
  }
  {
    Instance i = make_valid();
    i.demands[0].tiles.clear();
    const auto r = validate_instance(i);
    CHECK(has(r, "demands[0].tiles", "FoV tile set must be nonempty"));
  }
  {
    Instance i = make_valid();
    i.demands[0].tiles = {{1, 1}, {3, 1}};
    i.partition = compute_partition(i.demands);
    CHECK(has(validate_instance(i), "demands[0].tiles", "tile (3,1) outside grid"));
  }
  {
    Instance i = make_valid();
    i.demands[0].tiles = {{1, 2}, {1, 1}};
    CHECK(has(validate_instance(i), "demands[0].tiles", "must be sorted ascending"));
  }
  {
    Instance i = make_valid();
    i.demands[0].tiles = {{1, 1}, {1, 1}, {1, 2}};
    CHECK(has(validate_instance(i), "demands[0].tiles", "contains duplicates"));
  }
}

TEST_CASE("validate_instance: flags bad channel marginals and joint enumeration") {
  {
    Instance i = make_valid();
    i.channel.users.pop_back();
    CHECK(has(validate_instance(i), "channel.users", "must have one marginal per user"));
  }
  {
    Instance i = make_valid();
    i.channel.users[0].probs = {0.6, 0.6};
    CHECK(has(validate_instance(i), "channel.users[0].probs", "must sum to 1"));
  }
  {
    Instance i = make_valid();
    i.channel.users[1].probs = {1.5, -0.5};
    CHECK(has(validate_instance(i), "channel.users[1].probs", "must be nonnegative"));
  }
  {
    Instance i = make_valid();
    i.channel.users[0].gains = {0.0, 2e-6};
    CHECK(has(validate_instance(i), "channel.users[0].gains", "must be positive"));
  }
  {
    Instance i = make_valid();
    i.channel.users[0].gains = {1e-6, 1e-6};
    CHECK(has(validate_instance(i), "channel.users[0].gains", "must be distinct"));
  }
  {
    Instance i = make_valid();
    i.channel.joint_prob.pop_back();
    CHECK(has(validate_instance(i), "channel.joint", "enumeration missing or wrong size"));
  }
  {
    Instance i = make_valid();
    std::swap(i.channel.joint_gain[1][0], i.channel.joint_gain[1][1]);
    CHECK(has(validate_instance(i), "channel.joint", "not the product of the marginals"));
  }
  {
    Instance i = make_valid();
    i.channel.joint_prob[0] += 0.1;
    i.channel.joint_prob[1] -= 0.1;
    CHECK(has(validate_instance(i), "channel.joint", "not the product of the marginals"));
  }
}

TEST_CASE("validate_instance: flags bad system parameters") {
  {
    Instance i = make_valid();
    i.params.bandwidth_hz = 0.0;
    CHECK(has(validate_instance(i), "params.bandwidth_hz", "must be positive"));
  }
  {
    Instance i = make_valid();
    i.params.frame_seconds = -1.0;
    CHECK(has(validate_instance(i), "params.frame_seconds", "must be positive"));
  }
  {
    Instance i = make_valid();
    i.params.noise_watts = 0.0;
    CHECK(has(validate_instance(i), "params.noise_watts", "must be positive"));
  }
  {
    Instance i = make_valid();
    i.params.transcode_joule_per_step = {1e-6};
    CHECK(has(validate_instance(i), "params.transcode_joule_per_step", "size must equal user count"));
  }
  {
    Instance i = make_valid();
    i.params.transcode_joule_per_step = {1e-6, -1e-6};
    CHECK(has(validate_instance(i), "params.transcode_joule_per_step", "must be nonnegative"));
  }
  {
    Instance i = make_valid();
    i.params.beta = 0.5;
    CHECK(has(validate_instance(i), "params.beta", "must be >= 1"));
  }
}

TEST_CASE("validate_instance: flags partition law violations") {
  {
    Instance i = make_valid();
    i.partition.groups.clear();
    CHECK(has(validate_instance(i), "partition", "does not cover the union"));
  }
  {
    Instance i = make_valid();
    i.partition.groups[0].tiles.push_back({2, 1});
    std::sort(i.partition.groups[0].tiles.begin(), i.partition.groups[0].tiles.end());
    CHECK(has(validate_instance(i), "partition.groups[0]", "tile (2,1) not demanded by anyone"));
  }
  {
    Instance i = make_valid();
    // Move the shared tile (1,2) into user 1's solo group: owner set mismatch.
    Instance j = i;
    for (auto& g : j.partition.groups) {
      if (g.subset == UserSubset({1})) g.tiles = {{1, 1}, {1, 2}};
      if (g.subset == UserSubset({1, 2})) g.tiles = {{1, 2}};
    }
    const auto r = validate_instance(j);
    bool owner_mismatch = false;
    for (const auto& v : r.violations)
      owner_mismatch |= v.message.find("owner set is {1,2}, group says {1}") != std::string::npos;
    CHECK(owner_mismatch);
    bool dup = false;
    for (const auto& v : r.violations)
      dup |= v.message.find("appears in more than one group") != std::string::npos;
    CHECK(dup);
  }
  {
    Instance i = make_valid();
    i.partition.groups[0].tiles.clear();
    const auto r = validate_instance(i);
    CHECK(has(r, "partition.groups[0]", "group must be nonempty"));
    CHECK(has(r, "partition", "does not cover the union"));
  }
}

TEST_CASE("validate_instance: does not mutate its input") {
  const Instance i = make_valid();
  Instance copy = i;
  (void)validate_instance(copy);
  CHECK(copy == i);
}

TEST_CASE("UserSubset: constructor canonicalizes and ordering is size-major") {
  UserSubset s({3, 1, 2, 3, 1});
  CHECK(s.ids == std::vector<int>{1, 2, 3});
  CHECK(s.size() == 3);
  CHECK(s.contains(2));
  CHECK(!s.contains(4));
  CHECK(s.to_string() == "{1,2,3}");
  CHECK(UserSubset{}.to_string() == "{}");

  CHECK(UserSubset({3}) < UserSubset({1, 2}));     // smaller size first
  CHECK(UserSubset({1, 3}) < UserSubset({2, 3}));  // then lexicographic
  CHECK(!(UserSubset({2, 3}) < UserSubset({2, 3})));
  CHECK(UserSubset({2, 1}) == UserSubset({1, 2}));
}

TEST_CASE("Partition: find and index reflect the stored groups") {
  const Partition p = compute_partition(make_valid().demands);
  REQUIRE(p.groups.size() == 3);
  CHECK(p.index() == std::vector<UserSubset>{UserSubset({1}), UserSubset({2}), UserSubset({1, 2})});
  REQUIRE(p.find(UserSubset({1, 2})) != nullptr);
  CHECK(p.find(UserSubset({1, 2}))->tiles == std::vector<TileIndex>{{1, 2}});
  CHECK(p.find(UserSubset({1, 2, 3})) == nullptr);
}

TEST_CASE("Allocation: expected energy weights states by probability") {
  Allocation a;
  a.pairs = {{UserSubset({1}), 1}, {UserSubset({2}), 1}};
  a.time = {{0.01, 0.02}, {0.03, 0.04}};
  a.energy = {{1.0, 2.0}, {3.0, 4.0}};
  const std::vector<double> prob = {0.25, 0.75};
  CHECK(a.expected_energy(prob) == doctest::Approx(0.25 * (1 + 3) + 0.75 * (2 + 4)).epsilon(1e-15));
}

TEST_CASE("ValidationReport: rendering is one location-message line per violation") {
  ValidationReport r;
  CHECK(r.ok());
  CHECK(r.to_string().empty());
  r.violations.push_back({"a.b", "broken"});
  r.violations.push_back({"c", "worse"});
  CHECK(!r.ok());
  CHECK(r.to_string() == "a.b: broken\nc: worse\n");
}
