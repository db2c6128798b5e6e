#include "tilecast/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tilecast {

namespace {

// Positive-area overlap of [a0,a1] with [b0,b1]; boundary touching excluded.
// The 1e-9 deg slop keeps exactly tile-aligned FoVs from picking up neighbours
// through rounding while being far below any sane tile size.
constexpr double kEdgeEps = 1e-9;

bool overlaps(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) - std::max(a0, b0) > kEdgeEps;
}

double wrap360(double x) {
  double r = std::fmod(x, 360.0);
  return r < 0.0 ? r + 360.0 : r;
}

// Overlap test on the longitude circle: window of width w starting at x0
// (wrapped) against the tile span [b0,b1] with b1-b0 <= 360.
bool overlaps_circular(double x0, double w, double b0, double b1) {
  if (w >= 360.0 - kEdgeEps) return true;
  x0 = wrap360(x0);
  // Compare in an unwrapped frame anchored at x0: the window is [0,w], the
  // tile may appear shifted by -360, 0, +360.
  double c0 = wrap360(b0 - x0);
  double c1 = c0 + (b1 - b0);
  for (double shift : {-360.0, 0.0, 360.0})
    if (overlaps(0.0, w, c0 + shift, c1 + shift)) return true;
  return false;
}

}  // namespace

std::vector<TileIndex> tiles_for_fov(const FovSpec& fov, const VideoConfig& video) {
  if (!(fov.horizontal_deg > 0.0) || !(fov.vertical_deg > 0.0))
    throw std::invalid_argument("tiles_for_fov: spans must be positive");
  if (!(fov.margin_deg >= 0.0))
    throw std::invalid_argument("tiles_for_fov: margin must be nonnegative");
  if (fov.horizontal_deg + 2.0 * fov.margin_deg > 360.0)
    throw std::invalid_argument("tiles_for_fov: padded horizontal extent exceeds 360 deg");
  if (fov.vertical_deg + 2.0 * fov.margin_deg > 180.0)
    throw std::invalid_argument("tiles_for_fov: padded vertical extent exceeds 180 deg");
  if (video.rows < 1 || video.cols < 1)
    throw std::invalid_argument("tiles_for_fov: video grid must be nonempty");
  if (!(fov.center_lat_deg >= -90.0 && fov.center_lat_deg <= 90.0))
    throw std::invalid_argument("tiles_for_fov: center latitude must be in [-90,90]");

  const double tile_h = 360.0 / video.cols;
  const double tile_v = 180.0 / video.rows;
  const double hh = fov.horizontal_deg / 2.0 + fov.margin_deg;
  const double vh = fov.vertical_deg / 2.0 + fov.margin_deg;

  const double top = fov.center_lat_deg + vh;
  const double bottom = fov.center_lat_deg - vh;
  const double lon0 = fov.center_lon_deg - hh;  // window start, width 2*hh

  // Row m covers latitudes [90 - m*tile_v, 90 - (m-1)*tile_v].
  auto row_top = [&](int m) { return 90.0 - (m - 1) * tile_v; };
  auto row_bottom = [&](int m) { return 90.0 - m * tile_v; };

  std::vector<TileIndex> out;
  for (int m = 1; m <= video.rows; ++m) {
    bool all_lons = false;
    bool in_band = overlaps(bottom, top, row_bottom(m), row_top(m));
    // Crossing a pole: latitudes reached past the pole wrap to the opposite
    // longitudes, so the cap covers every longitude down to the reflected
    // latitude., e.g. top = 95 reaches all longitudes above lat 85.
    if (top > 90.0 && overlaps(180.0 - top, 90.0, row_bottom(m), row_top(m))) all_lons = true;
    if (bottom < -90.0 && overlaps(-90.0, -180.0 - bottom, row_bottom(m), row_top(m))) all_lons = true;
    if (!in_band && !all_lons) continue;

    for (int n = 1; n <= video.cols; ++n) {
      if (all_lons || overlaps_circular(lon0, 2.0 * hh, (n - 1) * tile_h, n * tile_h))
        out.push_back({m, n});
    }
  }
  return out;
}

Partition compute_partition(const std::vector<UserDemand>& demands) {
  // Group tiles by exact owner set. One pass over all tile references to
  // collect owners, one over distinct tiles to bucket them.
  std::map<TileIndex, std::vector<int>> owners;
  for (const auto& d : demands)
    for (const auto& t : d.tiles) owners[t].push_back(d.user);

  std::map<UserSubset, std::vector<TileIndex>> buckets;
  for (auto& [tile, ids] : owners) buckets[UserSubset(ids)].push_back(tile);

  Partition p;
  p.groups.reserve(buckets.size());
  for (auto& [subset, tiles] : buckets) {
    std::sort(tiles.begin(), tiles.end());
    p.groups.push_back({subset, std::move(tiles)});
  }
  return p;
}

}  // namespace tilecast
