#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scanmap/transform.hpp"

namespace scanmap {

/// 2D raster over the ground plane with named per-cell scalar layers.
/// Cell (0,0) is centered at `origin`; cell (ix,iy) covers
/// origin + cellSize * (ix, iy) +- cellSize/2. No-data cells hold NaN.
struct ElevationGrid {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // center of cell (0,0), map frame
  double cellSize = 0.1;
  int width = 0, height = 0;
  std::map<std::string, std::vector<double>> layers;  // row-major, height*width each

  static double noData() { return std::numeric_limits<double>::quiet_NaN(); }
  static bool isNoData(double v) { return std::isnan(v); }

  std::size_t cellCount() const { return static_cast<std::size_t>(width) * height; }
  std::size_t indexOf(int ix, int iy) const { return static_cast<std::size_t>(iy) * width + ix; }
  Eigen::Vector2d cellCenter(int ix, int iy) const {
    return origin + cellSize * Eigen::Vector2d(ix, iy);
  }
  Eigen::Vector2d minCorner() const { return origin - Eigen::Vector2d(cellSize, cellSize) / 2.0; }

  bool hasLayer(const std::string& name) const { return layers.count(name) > 0; }
  std::vector<double>& addLayer(const std::string& name);
  const std::vector<double>& layer(const std::string& name) const;  // throws if missing
  std::vector<double>& layer(const std::string& name);

  double at(const std::string& name, int ix, int iy) const { return layer(name)[indexOf(ix, iy)]; }
};

/// One CSV per layer at <prefix>_<layer>.csv, row-major, `nan` for no-data.
void dumpLayersCsv(const ElevationGrid& grid, const std::filesystem::path& prefix);

}  // namespace scanmap
