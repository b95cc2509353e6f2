#include "scanmap/csf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scanmap {

namespace {
constexpr double kNoCollision = -std::numeric_limits<double>::infinity();
}

double Cloth::interpolate(double x, double y) const {
  double u = (x - originX) / spacing;
  double v = (y - originY) / spacing;
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  i0 = std::clamp(i0, 0, cols - 2);
  j0 = std::clamp(j0, 0, rows - 2);
  double fu = std::clamp(u - i0, 0.0, 1.0);
  double fv = std::clamp(v - j0, 0.0, 1.0);
  double h00 = heightAt(i0, j0), h10 = heightAt(i0 + 1, j0);
  double h01 = heightAt(i0, j0 + 1), h11 = heightAt(i0 + 1, j0 + 1);
  return (1 - fu) * (1 - fv) * h00 + fu * (1 - fv) * h10 + (1 - fu) * fv * h01 + fu * fv * h11;
}

Cloth initCloth(const std::vector<Vec3>& invertedPoints, const CsfParams& params) {
  if (invertedPoints.empty()) throw std::invalid_argument("initCloth: empty cloud");
  double minX = invertedPoints[0].x(), maxX = minX;
  double minY = invertedPoints[0].y(), maxY = minY;
  double maxZ = invertedPoints[0].z();
  for (const Vec3& p : invertedPoints) {
    minX = std::min(minX, p.x());
    maxX = std::max(maxX, p.x());
    minY = std::min(minY, p.y());
    maxY = std::max(maxY, p.y());
    maxZ = std::max(maxZ, p.z());
  }
  if (maxX - minX <= 0.0 && maxY - minY <= 0.0) {
    throw std::invalid_argument("initCloth: cloud has zero xy extent");
  }

  const double s = params.clothResolution;
  Cloth cloth;
  cloth.spacing = s;
  cloth.originX = minX - s;
  cloth.originY = minY - s;
  cloth.cols = static_cast<int>(std::ceil((maxX - minX + 2.0 * s) / s)) + 1;
  cloth.rows = static_cast<int>(std::ceil((maxY - minY + 2.0 * s) / s)) + 1;
  cloth.height.assign(static_cast<std::size_t>(cloth.rows) * cloth.cols, maxZ + s);
  cloth.prevHeight = cloth.height;
  cloth.collision.assign(cloth.height.size(), kNoCollision);
  cloth.movable.assign(cloth.height.size(), 1);

  // Each particle collides at the height of the footprint point nearest its
  // own xy (ties to the lower index). Taking the cell maximum instead would
  // bias the cloth uphill by slope * spacing / 2, which at coarse resolutions
  // pushes sloped ground outside the classification threshold.
  std::vector<double> bestDist2(cloth.height.size(), std::numeric_limits<double>::infinity());
  for (const Vec3& p : invertedPoints) {
    int i = static_cast<int>(std::lround((p.x() - cloth.originX) / s));
    int j = static_cast<int>(std::lround((p.y() - cloth.originY) / s));
    i = std::clamp(i, 0, cloth.cols - 1);
    j = std::clamp(j, 0, cloth.rows - 1);
    std::size_t idx = static_cast<std::size_t>(j) * cloth.cols + i;
    double px = cloth.originX + i * s;
    double py = cloth.originY + j * s;
    double d2 = (p.x() - px) * (p.x() - px) + (p.y() - py) * (p.y() - py);
    if (d2 < bestDist2[idx]) {  // strict: earlier points win ties
      bestDist2[idx] = d2;
      cloth.collision[idx] = p.z();
    }
  }
  return cloth;
}

namespace {

constexpr double kVelocityDamping = 0.1;

/// Clamp to the collision surface; a touched particle freezes for good with
/// its velocity zeroed.
void applyCollision(Cloth& cloth, std::vector<double>& next) {
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!cloth.movable[i]) continue;
    if (cloth.collision[i] != kNoCollision && next[i] <= cloth.collision[i]) {
      next[i] = cloth.collision[i];
      cloth.prevHeight[i] = cloth.collision[i];
      cloth.movable[i] = 0;
    }
  }
}

}  // namespace

double simulateClothStep(Cloth& cloth, const CsfParams& params) {
  const std::size_t n = cloth.height.size();
  std::vector<double> start = cloth.height;
  std::vector<double> next = cloth.height;

  const double drop = params.gravity * params.timeStep * params.timeStep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cloth.movable[i]) continue;
    double velocity = (1.0 - kVelocityDamping) * (cloth.height[i] - cloth.prevHeight[i]);
    next[i] = cloth.height[i] + velocity - drop;
  }
  cloth.prevHeight = cloth.height;
  applyCollision(cloth, next);
  cloth.height = next;

  for (int pass = 0; pass < params.rigidness; ++pass) {
    for (int j = 0; j < cloth.rows; ++j) {
      for (int i = 0; i < cloth.cols; ++i) {
        std::size_t idx = static_cast<std::size_t>(j) * cloth.cols + i;
        if (!cloth.movable[idx]) {
          next[idx] = cloth.height[idx];
          continue;
        }
        double sum = 0.0;
        int count = 0;
        if (i > 0) { sum += cloth.heightAt(i - 1, j); ++count; }
        if (i + 1 < cloth.cols) { sum += cloth.heightAt(i + 1, j); ++count; }
        if (j > 0) { sum += cloth.heightAt(i, j - 1); ++count; }
        if (j + 1 < cloth.rows) { sum += cloth.heightAt(i, j + 1); ++count; }
        next[idx] = count > 0 ? 0.5 * (cloth.height[idx] + sum / count) : cloth.height[idx];
      }
    }
    applyCollision(cloth, next);
    cloth.height = next;
  }

  double maxDisplacement = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    maxDisplacement = std::max(maxDisplacement, std::abs(cloth.height[i] - start[i]));
  }
  return maxDisplacement;
}

CsfResult csfExtract(const PointCloud& cloud, const CsfParams& params) {
  if (cloud.empty()) throw std::invalid_argument("csfExtract: empty cloud");

  std::vector<Vec3> inverted;
  inverted.reserve(cloud.size());
  for (const Vec3& p : cloud.points) inverted.emplace_back(p.x(), p.y(), -p.z());

  Cloth cloth = initCloth(inverted, params);

  CsfResult result;
  for (int iter = 0; iter < params.maxIterations; ++iter) {
    double displacement = simulateClothStep(cloth, params);
    result.iterationsUsed = iter + 1;
    if (displacement < params.displacementEpsilon) break;
  }

  result.isGround.resize(cloud.size());
  const bool normals = cloud.hasNormals();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double clothZ = cloth.interpolate(inverted[i].x(), inverted[i].y());
    bool ground = std::abs(inverted[i].z() - clothZ) <= params.classThreshold;
    result.isGround[i] = ground ? 1 : 0;
    PointCloud& dst = ground ? result.ground : result.nonground;
    dst.points.push_back(cloud.points[i]);
    if (normals) dst.normals.push_back(cloud.normals[i]);
  }
  return result;
}

}  // namespace scanmap
