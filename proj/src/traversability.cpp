#include "scanmap/traversability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace scanmap {

namespace {

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  Vec3 centroid = Vec3::Zero();
  bool valid = false;
};

PlaneFit fitCellPlane(const std::vector<Vec3>& pts) {
  PlaneFit fit;
  if (pts.size() < 3) return fit;
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.eigenvalues()[2] <= 0.0) return fit;  // all cells coincident
  fit.normal = eig.eigenvectors().col(0).normalized();
  if (fit.normal.z() < 0.0) fit.normal = -fit.normal;
  fit.centroid = centroid;
  fit.valid = true;
  return fit;
}

}  // namespace

ElevationGrid rasterizeElevation(const PointCloud& ground, const TraversabilityParams& params) {
  if (ground.empty()) throw std::invalid_argument("rasterizeElevation: empty cloud");
  if (params.cellSize <= 0.0) throw std::invalid_argument("rasterizeElevation: cellSize must be > 0");

  double minX = ground.points[0].x(), maxX = minX;
  double minY = ground.points[0].y(), maxY = minY;
  for (const Vec3& p : ground.points) {
    minX = std::min(minX, p.x());
    maxX = std::max(maxX, p.x());
    minY = std::min(minY, p.y());
    maxY = std::max(maxY, p.y());
  }

  ElevationGrid grid;
  grid.cellSize = params.cellSize;
  grid.width = static_cast<int>(std::floor((maxX - minX) / params.cellSize)) + 1;
  grid.height = static_cast<int>(std::floor((maxY - minY) / params.cellSize)) + 1;
  grid.origin = Eigen::Vector2d(minX + params.cellSize / 2.0, minY + params.cellSize / 2.0);

  std::vector<double> sum(grid.cellCount(), 0.0);
  std::vector<int> count(grid.cellCount(), 0);
  for (const Vec3& p : ground.points) {
    int ix = std::min(grid.width - 1, static_cast<int>(std::floor((p.x() - minX) / params.cellSize)));
    int iy = std::min(grid.height - 1, static_cast<int>(std::floor((p.y() - minY) / params.cellSize)));
    std::size_t idx = grid.indexOf(ix, iy);
    sum[idx] += p.z();
    count[idx] += 1;
  }

  auto& elevation = grid.addLayer("elevation");
  for (std::size_t i = 0; i < grid.cellCount(); ++i) {
    if (count[i] > 0) elevation[i] = sum[i] / count[i];
  }
  return grid;
}

void surfaceNormalsLayer(ElevationGrid& grid, const TraversabilityParams& params) {
  const auto& elevation = grid.layer("elevation");
  std::vector<double> nx(grid.cellCount(), ElevationGrid::noData());
  std::vector<double> ny = nx, nz = nx;

  const int reach = std::max(1, static_cast<int>(std::ceil(params.normalRadius / grid.cellSize)));
  const double r2 = params.normalRadius * params.normalRadius;

  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      if (ElevationGrid::isNoData(elevation[grid.indexOf(ix, iy)])) continue;
      std::vector<Vec3> pts;
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= grid.width || jy >= grid.height) continue;
          double e = elevation[grid.indexOf(jx, jy)];
          if (ElevationGrid::isNoData(e)) continue;
          double dist2 = (dx * dx + dy * dy) * grid.cellSize * grid.cellSize;
          if (dist2 > r2) continue;
          Eigen::Vector2d c = grid.cellCenter(jx, jy);
          pts.emplace_back(c.x(), c.y(), e);
        }
      }
      PlaneFit fit = fitCellPlane(pts);
      if (!fit.valid) continue;
      std::size_t idx = grid.indexOf(ix, iy);
      nx[idx] = fit.normal.x();
      ny[idx] = fit.normal.y();
      nz[idx] = fit.normal.z();
    }
  }
  grid.layers["normal_x"] = std::move(nx);
  grid.layers["normal_y"] = std::move(ny);
  grid.layers["normal_z"] = std::move(nz);
}

void slopeLayer(ElevationGrid& grid) {
  const auto& nz = grid.layer("normal_z");
  auto& slope = grid.addLayer("slope");
  for (std::size_t i = 0; i < grid.cellCount(); ++i) {
    if (ElevationGrid::isNoData(nz[i])) continue;
    slope[i] = std::acos(std::clamp(nz[i], 0.0, 1.0));
  }
}

void roughnessLayer(ElevationGrid& grid, const TraversabilityParams& params) {
  const auto& elevation = grid.layer("elevation");
  const auto& nz = grid.layer("normal_z");
  auto& roughness = grid.addLayer("roughness");

  const int reach = std::max(1, static_cast<int>(std::floor(params.roughnessRadius / grid.cellSize + 1e-9)));

  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      std::size_t idx = grid.indexOf(ix, iy);
      if (ElevationGrid::isNoData(elevation[idx]) || ElevationGrid::isNoData(nz[idx])) continue;
      std::vector<Vec3> pts;
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          if (dx == 0 && dy == 0) continue;  // the cell's own elevation is not its roughness
          int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= grid.width || jy >= grid.height) continue;
          double e = elevation[grid.indexOf(jx, jy)];
          if (ElevationGrid::isNoData(e)) continue;
          Eigen::Vector2d c = grid.cellCenter(jx, jy);
          pts.emplace_back(c.x(), c.y(), e);
        }
      }
      if (pts.size() < 3) continue;
      PlaneFit fit = fitCellPlane(pts);
      if (!fit.valid) continue;
      double sumSq = 0.0;
      for (const Vec3& p : pts) {
        double d = fit.normal.dot(p - fit.centroid);
        sumSq += d * d;
      }
      roughness[idx] = std::sqrt(sumSq / static_cast<double>(pts.size()));
    }
  }
}

void traversabilityLayer(ElevationGrid& grid, const TraversabilityParams& params) {
  const auto& slope = grid.layer("slope");
  const auto& roughness = grid.layer("roughness");
  auto& cost = grid.addLayer("traversability");
  for (std::size_t i = 0; i < grid.cellCount(); ++i) {
    if (ElevationGrid::isNoData(slope[i]) || ElevationGrid::isNoData(roughness[i])) continue;
    double s = std::min(slope[i] / params.slopeCritical, 1.0);
    double r = std::min(roughness[i] / params.roughnessCritical, 1.0);
    if (s >= 1.0 || r >= 1.0) {
      cost[i] = 1.0;  // saturated axis means impassable regardless of weights
    } else {
      cost[i] = params.slopeWeight * s + params.roughnessWeight * r;
    }
  }
}

void exportCostmap(const ElevationGrid& grid, const std::filesystem::path& prefix,
                   const TraversabilityParams& params) {
  const auto& cost = grid.layer("traversability");

  std::filesystem::path pgmPath = prefix;
  pgmPath += ".pgm";
  std::ofstream pgm(pgmPath, std::ios::binary);
  if (!pgm) throw std::runtime_error(pgmPath.string() + ": cannot open for writing");
  pgm << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  for (int iy = grid.height - 1; iy >= 0; --iy) {  // row 0 of the image = max-y edge
    for (int ix = 0; ix < grid.width; ++ix) {
      double v = cost[grid.indexOf(ix, iy)];
      unsigned char pixel;
      if (ElevationGrid::isNoData(v)) {
        pixel = 205;
      } else if (v <= params.costCutoff) {
        pixel = 254;
      } else {
        pixel = 0;
      }
      pgm.put(static_cast<char>(pixel));
    }
  }
  if (!pgm) throw std::runtime_error(pgmPath.string() + ": write failed");

  std::filesystem::path yamlPath = prefix;
  yamlPath += ".yaml";
  std::ofstream yaml(yamlPath);
  if (!yaml) throw std::runtime_error(yamlPath.string() + ": cannot open for writing");
  Eigen::Vector2d corner = grid.minCorner();
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "image: %s\nresolution: %.6f\norigin: [%.6f, %.6f, 0.000000]\nnegate: 0\n"
                "occupied_thresh: 0.65\nfree_thresh: 0.196\n",
                pgmPath.filename().string().c_str(), grid.cellSize, corner.x(), corner.y());
  yaml << buf;
  if (!yaml) throw std::runtime_error(yamlPath.string() + ": write failed");
}

}  // namespace scanmap
