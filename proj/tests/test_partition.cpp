#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "tilecast/partition.hpp"
#include "tilecast/rng.hpp"

using namespace tilecast;

namespace {

std::vector<UserDemand> example1_demands() {
  return {
      {1, 1, {{1, 3}, {1, 4}, {1, 5}, {2, 3}, {2, 4}, {2, 5}}},
      {2, 2, {{2, 4}, {2, 5}, {2, 6}, {3, 4}, {3, 5}, {3, 6}}},
      {3, 2, {{3, 5}, {3, 6}, {3, 7}, {4, 5}, {4, 6}, {4, 7}}},
  };
}

// Brute-force oracle: per tile, scan every demand for membership, then bucket.
std::map<UserSubset, std::set<TileIndex>> owner_oracle(const std::vector<UserDemand>& demands) {
  std::set<TileIndex> all;
  for (const auto& d : demands) all.insert(d.tiles.begin(), d.tiles.end());
  std::map<UserSubset, std::set<TileIndex>> buckets;
  for (const auto& t : all) {
    std::vector<int> ids;
    for (const auto& d : demands)
      if (std::binary_search(d.tiles.begin(), d.tiles.end(), t)) ids.push_back(d.user);
    buckets[UserSubset(ids)].insert(t);
  }
  return buckets;
}

std::vector<UserDemand> random_demands(Rng& rng, int users, int rows, int cols) {
  std::vector<UserDemand> out;
  for (int k = 1; k <= users; ++k) {
    std::set<TileIndex> tiles;
    const int count = rng.uniform_int(1, rows * cols);
    for (int i = 0; i < count; ++i)
      tiles.insert({rng.uniform_int(1, rows), rng.uniform_int(1, cols)});
    out.push_back({k, 1, {tiles.begin(), tiles.end()}});
  }
  return out;
}

std::set<int> cols_of_row(const std::vector<TileIndex>& tiles, int row) {
  std::set<int> out;
  for (const auto& t : tiles)
    if (t.row == row) out.insert(t.col);
  return out;
}

}  // namespace

TEST_CASE("compute_partition: the worked three-user example groups by exact owner set") {
  const Partition p = compute_partition(example1_demands());
  REQUIRE(p.groups.size() == 5);

  // Groups are ordered by subset (size first, then lexicographic ids) and
  // tiles ascending within each group.
  CHECK(p.groups[0].subset == UserSubset({1}));
  CHECK(p.groups[0].tiles == std::vector<TileIndex>{{1, 3}, {1, 4}, {1, 5}, {2, 3}});
  CHECK(p.groups[1].subset == UserSubset({2}));
  CHECK(p.groups[1].tiles == std::vector<TileIndex>{{2, 6}, {3, 4}});
  CHECK(p.groups[2].subset == UserSubset({3}));
  CHECK(p.groups[2].tiles == std::vector<TileIndex>{{3, 7}, {4, 5}, {4, 6}, {4, 7}});
  CHECK(p.groups[3].subset == UserSubset({1, 2}));
  CHECK(p.groups[3].tiles == std::vector<TileIndex>{{2, 4}, {2, 5}});
  CHECK(p.groups[4].subset == UserSubset({2, 3}));
  CHECK(p.groups[4].tiles == std::vector<TileIndex>{{3, 5}, {3, 6}});

  CHECK(p.find(UserSubset({1, 3})) == nullptr);
  REQUIRE(p.find(UserSubset({2, 3})) != nullptr);
  CHECK(p.find(UserSubset({2, 3}))->tiles.size() == 2);
  const std::vector<UserSubset> index = p.index();
  CHECK(index == std::vector<UserSubset>{UserSubset({1}), UserSubset({2}), UserSubset({3}),
                                         UserSubset({1, 2}), UserSubset({2, 3})});
}

TEST_CASE("compute_partition: single user yields one group owning every tile") {
  std::vector<UserDemand> d = {{1, 2, {{1, 1}, {2, 2}, {3, 3}}}};
  const Partition p = compute_partition(d);
  REQUIRE(p.groups.size() == 1);
  CHECK(p.groups[0].subset == UserSubset({1}));
  CHECK(p.groups[0].tiles == d[0].tiles);
}

TEST_CASE("compute_partition: identical demand sets collapse to the full subset") {
  std::vector<TileIndex> tiles = {{1, 2}, {2, 1}, {2, 2}};
  std::vector<UserDemand> d = {{1, 1, tiles}, {2, 3, tiles}, {3, 2, tiles}};
  const Partition p = compute_partition(d);
  REQUIRE(p.groups.size() == 1);
  CHECK(p.groups[0].subset == UserSubset({1, 2, 3}));
  CHECK(p.groups[0].tiles == tiles);
}

TEST_CASE("compute_partition: empty input and empty tile sets contribute nothing") {
  CHECK(compute_partition({}).groups.empty());
  std::vector<UserDemand> d = {{1, 1, {{1, 1}}}, {2, 1, {}}};
  const Partition p = compute_partition(d);
  REQUIRE(p.groups.size() == 1);
  CHECK(p.groups[0].subset == UserSubset({1}));
}

TEST_CASE("compute_partition: matches the per-tile owner oracle on random instances") {
  Rng rng(21);
  for (int it = 0; it < 200; ++it) {
    const int users = rng.uniform_int(1, 5);
    const int rows = rng.uniform_int(1, 8);
    const int cols = rng.uniform_int(1, 8);
    const auto demands = random_demands(rng, users, rows, cols);
    const Partition p = compute_partition(demands);
    const auto oracle = owner_oracle(demands);

    REQUIRE(p.groups.size() == oracle.size());
    for (const auto& g : p.groups) {
      auto it2 = oracle.find(g.subset);
      REQUIRE(it2 != oracle.end());
      CHECK(std::set<TileIndex>(g.tiles.begin(), g.tiles.end()) == it2->second);
      CHECK(std::is_sorted(g.tiles.begin(), g.tiles.end()));
      CHECK(!g.tiles.empty());
    }
  }
}

TEST_CASE("compute_partition: groups are disjoint and cover the demanded union") {
  Rng rng(22);
  for (int it = 0; it < 50; ++it) {
    const auto demands = random_demands(rng, rng.uniform_int(1, 5), 6, 6);
    std::set<TileIndex> uni;
    for (const auto& d : demands) uni.insert(d.tiles.begin(), d.tiles.end());

    const Partition p = compute_partition(demands);
    size_t total = 0;
    std::set<TileIndex> seen;
    for (const auto& g : p.groups) {
      total += g.tiles.size();
      for (const auto& t : g.tiles) CHECK(seen.insert(t).second);  // disjoint
    }
    CHECK(total == uni.size());
    CHECK(seen == uni);
  }
}

TEST_CASE("tiles_for_fov: equatorial view on the reference grid is a 12x12 block") {
  VideoConfig video{18, 36, 1, {1.0}};
  const auto tiles = tiles_for_fov({0.0, 180.0, 100.0, 100.0, 10.0}, video);
  REQUIRE(tiles.size() == 144);
  std::set<TileIndex> got(tiles.begin(), tiles.end());
  for (int m = 4; m <= 15; ++m)
    for (int n = 13; n <= 24; ++n) CHECK(got.count({m, n}) == 1);
}

TEST_CASE("tiles_for_fov: longitude window wraps across the seam") {
  VideoConfig video{18, 36, 1, {1.0}};
  const auto tiles = tiles_for_fov({0.0, 0.0, 100.0, 100.0, 10.0}, video);
  REQUIRE(tiles.size() == 144);
  const auto cols = cols_of_row(tiles, 10);
  CHECK(cols == std::set<int>{31, 32, 33, 34, 35, 36, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("tiles_for_fov: a view strictly inside one tile selects only that tile") {
  VideoConfig video{18, 36, 1, {1.0}};
  const auto tiles = tiles_for_fov({85.0, 5.0, 5.0, 5.0, 0.0}, video);
  CHECK(tiles == std::vector<TileIndex>{{1, 1}});
}

TEST_CASE("tiles_for_fov: shifting the center by whole tiles rotates the columns") {
  VideoConfig video{18, 36, 1, {1.0}};
  const FovSpec base{0.0, 95.0, 100.0, 100.0, 10.0};
  const auto ref = tiles_for_fov(base, video);
  for (int shift : {1, 5, 17, 30}) {
    FovSpec moved = base;
    moved.center_lon_deg = base.center_lon_deg + 10.0 * shift;
    const auto got = tiles_for_fov(moved, video);
    REQUIRE(got.size() == ref.size());
    std::set<TileIndex> expect;
    for (const auto& t : ref) expect.insert({t.row, (t.col - 1 + shift) % 36 + 1});
    CHECK(std::set<TileIndex>(got.begin(), got.end()) == expect);
  }
}

TEST_CASE("tiles_for_fov: a view crossing the pole caps every longitude") {
  VideoConfig video{18, 36, 1, {1.0}};
  const auto tiles = tiles_for_fov({85.0, 0.0, 100.0, 20.0, 0.0}, video);
  // top reaches lat 95: the cap covers all of row 1; row 2 stays windowed.
  CHECK(cols_of_row(tiles, 1).size() == 36);
  CHECK(cols_of_row(tiles, 2) == std::set<int>{32, 33, 34, 35, 36, 1, 2, 3, 4, 5});
  CHECK(cols_of_row(tiles, 3).empty());
}

TEST_CASE("tiles_for_fov: rejects degenerate or oversized spans") {
  VideoConfig video{18, 36, 1, {1.0}};
  CHECK_THROWS_AS(tiles_for_fov({0, 0, 0.0, 90, 0}, video), std::invalid_argument);
  CHECK_THROWS_AS(tiles_for_fov({0, 0, 90, -1.0, 0}, video), std::invalid_argument);
  CHECK_THROWS_AS(tiles_for_fov({0, 0, 90, 90, -0.5}, video), std::invalid_argument);
  CHECK_THROWS_AS(tiles_for_fov({0, 0, 350, 90, 10}, video), std::invalid_argument);
  CHECK_THROWS_AS(tiles_for_fov({0, 0, 90, 170, 10}, video), std::invalid_argument);
  CHECK_THROWS_AS(tiles_for_fov({95.0, 0, 90, 90, 0}, video), std::invalid_argument);
  CHECK_NOTHROW(tiles_for_fov({0, 0, 340, 160, 10}, video));
}
