#pragma once

#include "scanmap/elevation_grid.hpp"
#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct TraversabilityParams {
  double cellSize = 0.1;          // meters
  double normalRadius = 0.3;      // meters, disc neighborhood for the plane fit
  double roughnessRadius = 0.1;   // meters, per-axis (box) neighborhood half-width
  double slopeCritical = 0.35;    // radians; slope at or beyond this is impassable
  double roughnessCritical = 0.1; // meters
  double slopeWeight = 0.5;
  double roughnessWeight = 0.5;   // weights sum to 1
  double costCutoff = 0.8;        // traversable iff cost <= cutoff
};

/// Per-cell mean z of the ground points; grid bounds tight to their xy
/// bounding box; empty cells stay no-data.
ElevationGrid rasterizeElevation(const PointCloud& ground, const TraversabilityParams& params);

/// Least-squares plane per cell over valid cells within normalRadius,
/// oriented with normal_z >= 0. Fewer than 3 support cells -> no-data.
void surfaceNormalsLayer(ElevationGrid& grid, const TraversabilityParams& params);

/// slope = arccos(normal_z), radians in [0, pi/2].
void slopeLayer(ElevationGrid& grid);

/// RMS distance of the surrounding cells' elevation points (those within
/// roughnessRadius per axis, the cell itself excluded) to their own best-fit
/// plane. Fewer than 3 neighbors -> no-data.
void roughnessLayer(ElevationGrid& grid, const TraversabilityParams& params);

/// cost = slopeWeight * min(slope/slopeCritical, 1)
///      + roughnessWeight * min(roughness/roughnessCritical, 1),
/// forced to 1 when either ratio saturates. No-data propagates.
void traversabilityLayer(ElevationGrid& grid, const TraversabilityParams& params);

/// Writes <prefix>.pgm (P5, maxval 255: 254 free, 0 occupied, 205 unknown,
/// row 0 = max-y edge) and <prefix>.yaml map metadata.
void exportCostmap(const ElevationGrid& grid, const std::filesystem::path& prefix,
                   const TraversabilityParams& params);

}  // namespace scanmap
