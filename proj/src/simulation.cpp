#include "scanmap/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "scanmap/cloud_io.hpp"
#include "scanmap/parallel.hpp"

namespace scanmap {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t raySeed(std::uint64_t seed, std::uint64_t scan, std::uint64_t ring, std::uint64_t az) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ scan);
  h = mix64(h ^ (ring << 32));
  return mix64(h ^ az);
}

bool insideFootprint(const BoxSpec& box, double x, double y) {
  return x >= box.min.x() && x <= box.max.x() && y >= box.min.y() && y <= box.max.y();
}

/// Slab test; returns the entry parameter if the ray hits within (tMin, tMax).
std::optional<double> intersectBox(const BoxSpec& box, const Vec3& origin, const Vec3& dir,
                                   double tMin, double tMax) {
  double t0 = tMin, t1 = tMax;
  for (int axis = 0; axis < 3; ++axis) {
    double inv = 1.0 / dir[axis];  // +-inf for parallel rays works out below
    double ta = (box.min[axis] - origin[axis]) * inv;
    double tb = (box.max[axis] - origin[axis]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace

double Scene::terrainHeight(double x, double y) const {
  double z = spec.terrain.planeA * x + spec.terrain.planeB * y + spec.terrain.planeC;
  for (const SinusoidTerm& s : spec.terrain.sinusoids) {
    z += s.amplitude * std::sin(s.freqX * x + s.freqY * y + s.phase);
  }
  return z;
}

double Scene::terrainGradientBound() const {
  double gx = std::abs(spec.terrain.planeA);
  double gy = std::abs(spec.terrain.planeB);
  for (const SinusoidTerm& s : spec.terrain.sinusoids) {
    gx += std::abs(s.amplitude * s.freqX);
    gy += std::abs(s.amplitude * s.freqY);
  }
  return std::hypot(gx, gy);
}

double Scene::terrainUpperBound() const {
  double planeMax = spec.terrain.planeC;
  double best = -std::numeric_limits<double>::infinity();
  for (double x : {spec.boundsMin.x(), spec.boundsMax.x()}) {
    for (double y : {spec.boundsMin.y(), spec.boundsMax.y()}) {
      best = std::max(best, spec.terrain.planeA * x + spec.terrain.planeB * y);
    }
  }
  planeMax += best;
  for (const SinusoidTerm& s : spec.terrain.sinusoids) planeMax += std::abs(s.amplitude);
  return planeMax;
}

PointCloud Scene::referenceAll() const {
  PointCloud all = referenceGround;
  appendCloud(all, referenceNonground);
  return all;
}

Scene buildScene(const SceneSpec& spec) {
  if (spec.boundsMax.x() <= spec.boundsMin.x() || spec.boundsMax.y() <= spec.boundsMin.y()) {
    throw std::invalid_argument("scene.bounds: max must exceed min");
  }
  if (spec.referenceStep <= 0.0) {
    throw std::invalid_argument("scene.reference_step: must be > 0");
  }
  for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
    const BoxSpec& box = spec.boxes[b];
    if ((box.max - box.min).minCoeff() <= 0.0) {
      throw std::invalid_argument("scene.boxes[" + std::to_string(b) + "]: max must exceed min");
    }
    if (box.min.x() < spec.boundsMin.x() || box.min.y() < spec.boundsMin.y() ||
        box.max.x() > spec.boundsMax.x() || box.max.y() > spec.boundsMax.y()) {
      throw std::invalid_argument("scene.boxes[" + std::to_string(b) + "]: outside scene bounds");
    }
  }

  Scene scene;
  scene.spec = spec;

  const double step = spec.referenceStep;
  auto covered = [&](double x, double y) {
    for (const BoxSpec& box : spec.boxes) {
      if (insideFootprint(box, x, y)) return true;
    }
    return false;
  };

  // terrain sample, skipping cells a box sits on
  int nx = static_cast<int>(std::floor((spec.boundsMax.x() - spec.boundsMin.x()) / step)) + 1;
  int ny = static_cast<int>(std::floor((spec.boundsMax.y() - spec.boundsMin.y()) / step)) + 1;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double x = spec.boundsMin.x() + ix * step;
      double y = spec.boundsMin.y() + iy * step;
      if (covered(x, y)) continue;
      scene.referenceGround.add(x, y, scene.terrainHeight(x, y));
    }
  }

  // box faces: top plus the four sides down to the terrain
  for (const BoxSpec& box : spec.boxes) {
    int bx = std::max(1, static_cast<int>(std::floor((box.max.x() - box.min.x()) / step))) + 1;
    int by = std::max(1, static_cast<int>(std::floor((box.max.y() - box.min.y()) / step))) + 1;
    int bz = std::max(1, static_cast<int>(std::floor((box.max.z() - box.min.z()) / step))) + 1;
    for (int iy = 0; iy < by; ++iy) {
      for (int ix = 0; ix < bx; ++ix) {
        double x = std::min(box.min.x() + ix * step, box.max.x());
        double y = std::min(box.min.y() + iy * step, box.max.y());
        scene.referenceNonground.add(x, y, box.max.z());
      }
    }
    for (int iz = 0; iz < bz; ++iz) {
      double z = std::min(box.min.z() + iz * step, box.max.z());
      for (int ix = 0; ix < bx; ++ix) {
        double x = std::min(box.min.x() + ix * step, box.max.x());
        if (z >= scene.terrainHeight(x, box.min.y())) scene.referenceNonground.add(x, box.min.y(), z);
        if (z >= scene.terrainHeight(x, box.max.y())) scene.referenceNonground.add(x, box.max.y(), z);
      }
      for (int iy = 0; iy < by; ++iy) {
        double y = std::min(box.min.y() + iy * step, box.max.y());
        if (z >= scene.terrainHeight(box.min.x(), y)) scene.referenceNonground.add(box.min.x(), y, z);
        if (z >= scene.terrainHeight(box.max.x(), y)) scene.referenceNonground.add(box.max.x(), y, z);
      }
    }
  }
  return scene;
}

namespace {

/// First terrain crossing along the ray, or nullopt. Marches with steps
/// bounded by the terrain gradient so no crossing can be skipped, then
/// bisects the bracket down to ~1e-9.
std::optional<double> intersectTerrain(const Scene& scene, const Vec3& origin, const Vec3& dir,
                                       double tMax) {
  auto gap = [&](double t) {
    Vec3 p = origin + t * dir;
    return p.z() - scene.terrainHeight(p.x(), p.y());
  };

  // restrict to the t-range where xy stays inside the scene bounds
  double tEnter = 0.0, tExit = tMax;
  for (int axis = 0; axis < 2; ++axis) {
    double lo = scene.spec.boundsMin[axis], hi = scene.spec.boundsMax[axis];
    if (std::abs(dir[axis]) < 1e-15) {
      if (origin[axis] < lo || origin[axis] > hi) return std::nullopt;
      continue;
    }
    double ta = (lo - origin[axis]) / dir[axis];
    double tb = (hi - origin[axis]) / dir[axis];
    if (ta > tb) std::swap(ta, tb);
    tEnter = std::max(tEnter, ta);
    tExit = std::min(tExit, tb);
  }
  if (tEnter >= tExit) return std::nullopt;

  if (dir.z() >= 0.0 && origin.z() + tEnter * dir.z() > scene.terrainUpperBound()) {
    return std::nullopt;  // rising ray already above everything
  }

  const double slopeBound =
      std::abs(dir.z()) + scene.terrainGradientBound() * std::hypot(dir.x(), dir.y());
  const double minStep = 1e-4;

  double t = tEnter;
  double g = gap(t);
  if (g <= 0.0) return std::nullopt;  // starts below terrain; nothing sensible to report
  while (t < tExit) {
    double step = std::max(minStep, g / std::max(slopeBound, 1e-12));
    double tn = std::min(t + step, tExit);
    double gn = gap(tn);
    if (gn <= 0.0) {
      double lo = t, hi = tn;
      for (int i = 0; i < 80 && hi - lo > 1e-10; ++i) {
        double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    if (tn >= tExit) break;
    t = tn;
    g = gn;
  }
  return std::nullopt;
}

}  // namespace

PointCloud simulateScan(const Scene& scene, const RigidTransform& pose, const LidarModel& model,
                        std::uint64_t scanIndex) {
  const int azimuthCount =
      std::max(1, static_cast<int>(std::lround(360.0 / model.horizontalResolutionDeg)));
  const double azStep = 2.0 * kPi / azimuthCount;
  const std::size_t rayCount = static_cast<std::size_t>(model.rings) * azimuthCount;

  std::vector<std::optional<Vec3>> hits(rayCount);
  parallelFor(rayCount, [&](std::size_t ray) {
    int ring = static_cast<int>(ray) / azimuthCount;
    int az = static_cast<int>(ray) % azimuthCount;
    double elevation =
        model.rings > 1
            ? (model.elevationMinDeg +
               (model.elevationMaxDeg - model.elevationMinDeg) * ring / (model.rings - 1)) *
                  kPi / 180.0
            : model.elevationMinDeg * kPi / 180.0;
    double azimuth = az * azStep;
    Vec3 dirSensor(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                   std::sin(elevation));
    Vec3 dirWorld = pose.rotation * dirSensor;

    double tHit = model.maxRange;
    bool hit = false;
    for (const BoxSpec& box : scene.spec.boxes) {
      auto t = intersectBox(box, pose.translation, dirWorld, 1e-6, tHit);
      if (t) {
        tHit = *t;
        hit = true;
      }
    }
    auto tTerrain = intersectTerrain(scene, pose.translation, dirWorld, tHit);
    if (tTerrain) {
      tHit = *tTerrain;
      hit = true;
    }
    if (!hit) return;

    double range = tHit;
    if (model.rangeNoiseSigma > 0.0) {
      std::mt19937_64 rng(raySeed(model.seed, scanIndex, static_cast<std::uint64_t>(ring),
                                  static_cast<std::uint64_t>(az)));
      std::normal_distribution<double> noise(0.0, model.rangeNoiseSigma);
      range = std::max(1e-3, range + noise(rng));
    }
    hits[ray] = range * dirSensor;
  });

  PointCloud cloud;
  cloud.reserve(rayCount);
  for (const auto& h : hits) {
    if (h) cloud.points.push_back(*h);
  }
  return cloud;
}

namespace {

Eigen::Quaterniond yawQuat(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
}

}  // namespace

ScanSequence generateSequence(const Scene& scene, const TrajectorySpec& trajectory,
                              const LidarModel& model) {
  if (trajectory.waypoints.empty()) {
    throw std::invalid_argument("trajectory.waypoints: at least one required");
  }
  if (trajectory.rate <= 0.0 || trajectory.speed <= 0.0) {
    throw std::invalid_argument("trajectory.speed/rate: must be > 0");
  }
  for (std::size_t i = 0; i < trajectory.waypoints.size(); ++i) {
    const Vec3& w = trajectory.waypoints[i];
    if (w.x() < scene.spec.boundsMin.x() || w.x() > scene.spec.boundsMax.x() ||
        w.y() < scene.spec.boundsMin.y() || w.y() > scene.spec.boundsMax.y()) {
      throw std::invalid_argument("trajectory.waypoints[" + std::to_string(i) +
                                  "]: outside scene bounds");
    }
  }

  const auto& wps = trajectory.waypoints;
  std::vector<double> segLength;
  std::vector<double> segYaw;
  double totalLength = 0.0;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    Eigen::Vector2d d = (wps[i + 1] - wps[i]).head<2>();
    segLength.push_back(d.norm());
    segYaw.push_back(d.norm() > 1e-12 ? std::atan2(d.y(), d.x()) : 0.0);
    totalLength += segLength.back();
  }

  auto poseAt = [&](double s) {
    RigidTransform pose;
    Vec3 position = wps.front();
    Eigen::Quaterniond q = yawQuat(segYaw.empty() ? 0.0 : segYaw.front());
    if (!segLength.empty() && totalLength > 0.0) {
      double remaining = std::clamp(s, 0.0, totalLength);
      std::size_t seg = 0;
      while (seg + 1 < segLength.size() && remaining > segLength[seg]) {
        remaining -= segLength[seg];
        ++seg;
      }
      double u = segLength[seg] > 0.0 ? std::clamp(remaining / segLength[seg], 0.0, 1.0) : 0.0;
      position = wps[seg] + u * (wps[seg + 1] - wps[seg]);
      // blend heading toward the next segment across this one
      q = seg + 1 < segYaw.size() ? yawQuat(segYaw[seg]).slerp(u, yawQuat(segYaw[seg + 1]))
                                  : yawQuat(segYaw[seg]);
    }
    pose.rotation = q.toRotationMatrix();
    if (trajectory.zAboveTerrain) {
      position.z() = scene.terrainHeight(position.x(), position.y()) + position.z();
    }
    pose.translation = position;
    return pose;
  };

  const double dt = 1.0 / trajectory.rate;
  int movingTicks = totalLength > 0.0
                        ? static_cast<int>(std::floor(totalLength / (trajectory.speed * dt))) + 1
                        : 0;
  int dwell = std::max(trajectory.dwellTicks, movingTicks == 0 ? 1 : 0);

  ScanSequence sequence;
  std::uint64_t tick = 0;
  for (int i = 0; i < dwell; ++i, ++tick) {
    TimedPose tp{tick * dt, poseAt(0.0)};
    sequence.groundTruth.push_back(tp);
    sequence.scans.push_back({tp.timestamp, simulateScan(scene, tp.pose, model, tick)});
  }
  for (int i = 0; i < movingTicks; ++i, ++tick) {
    TimedPose tp{tick * dt, poseAt(trajectory.speed * (i * dt))};
    sequence.groundTruth.push_back(tp);
    sequence.scans.push_back({tp.timestamp, simulateScan(scene, tp.pose, model, tick)});
  }
  sequence.sceneReference = scene.referenceAll();
  return sequence;
}

void saveSequence(const ScanSequence& sequence, const std::filesystem::path& dir,
                  const PointCloud* referenceGround, const PointCloud* referenceNonground) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "sequence.txt");
  if (!manifest) throw std::runtime_error((dir / "sequence.txt").string() + ": cannot open");
  for (std::size_t i = 0; i < sequence.scans.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scan_%06zu.pcd", i);
    saveCloud(sequence.scans[i].cloud, dir / name, CloudFormat::PCD);
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%.6f", sequence.scans[i].timestamp);
    manifest << stamp << ' ' << name << '\n';
  }
  writeTrajectoryTum(sequence.groundTruth, dir / "ground_truth.tum");
  if (!sequence.sceneReference.empty()) {
    saveCloud(sequence.sceneReference, dir / "reference.ply", CloudFormat::PLY);
  }
  if (referenceGround) saveCloud(*referenceGround, dir / "reference_ground.ply", CloudFormat::PLY);
  if (referenceNonground) {
    saveCloud(*referenceNonground, dir / "reference_nonground.ply", CloudFormat::PLY);
  }
}

ScanSequence loadSequence(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "sequence.txt");
  if (!manifest) throw std::runtime_error((dir / "sequence.txt").string() + ": cannot open");
  ScanSequence sequence;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double stamp;
    std::string name;
    if (!(ss >> stamp >> name)) {
      throw std::runtime_error((dir / "sequence.txt").string() + ": malformed line '" + line + "'");
    }
    sequence.scans.push_back({stamp, loadCloud(dir / name)});
  }
  if (std::filesystem::exists(dir / "ground_truth.tum")) {
    sequence.groundTruth = readTrajectoryTum(dir / "ground_truth.tum");
  }
  if (std::filesystem::exists(dir / "reference.ply")) {
    sequence.sceneReference = loadCloud(dir / "reference.ply");
  }
  return sequence;
}

}  // namespace scanmap
