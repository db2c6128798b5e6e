#pragma once

// FoV geometry on the equirectangular tile grid and the exact-owner-set
// partition of the demanded tiles.

#include "tilecast/types.hpp"

namespace tilecast {

// Viewing direction / field of view, all in degrees. lat in [-90,90] with +90
// at the top row; lon taken modulo 360.
struct FovSpec {
  double center_lat_deg = 0.0;
  double center_lon_deg = 0.0;
  double horizontal_deg = 0.0;
  double vertical_deg = 0.0;
  double margin_deg = 0.0;
};

// Tiles whose closed rectangle intersects the padded FoV rectangle with
// nonzero area (boundary touching excluded). Longitude wraps modulo 360; if
// the padded FoV crosses a pole, the rows reached past the pole are included
// across all longitudes (a cap around the pole spans every longitude).
// Throws std::invalid_argument if spans are nonpositive or the padded extent
// exceeds 360 deg horizontally / 180 deg vertically.
std::vector<TileIndex> tiles_for_fov(const FovSpec& fov, const VideoConfig& video);

// Exact-cover partition: groups tiles of union(G_k) by the exact set of users
// demanding them. O(total tile references) via owner-set grouping. Demands
// with empty tile sets contribute nothing. Requires valid 1-based user ids.
Partition compute_partition(const std::vector<UserDemand>& demands);

}  // namespace tilecast
