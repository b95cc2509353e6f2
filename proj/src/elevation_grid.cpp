#include "scanmap/elevation_grid.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace scanmap {

std::vector<double>& ElevationGrid::addLayer(const std::string& name) {
  auto [it, inserted] = layers.try_emplace(name, std::vector<double>(cellCount(), noData()));
  if (!inserted) {
    it->second.assign(cellCount(), noData());
  }
  return it->second;
}

const std::vector<double>& ElevationGrid::layer(const std::string& name) const {
  auto it = layers.find(name);
  if (it == layers.end()) throw std::out_of_range("ElevationGrid: no layer '" + name + "'");
  return it->second;
}

std::vector<double>& ElevationGrid::layer(const std::string& name) {
  auto it = layers.find(name);
  if (it == layers.end()) throw std::out_of_range("ElevationGrid: no layer '" + name + "'");
  return it->second;
}

void dumpLayersCsv(const ElevationGrid& grid, const std::filesystem::path& prefix) {
  for (const auto& [name, data] : grid.layers) {
    std::filesystem::path path = prefix;
    path += "_" + name + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    for (int iy = 0; iy < grid.height; ++iy) {
      for (int ix = 0; ix < grid.width; ++ix) {
        if (ix > 0) out << ',';
        double v = data[grid.indexOf(ix, iy)];
        if (ElevationGrid::isNoData(v)) {
          out << "nan";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.9g", v);
          out << buf;
        }
      }
      out << '\n';
    }
  }
}

}  // namespace scanmap
