#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scanmap/trajectory.hpp"

namespace scanmap {

/// z += amplitude * sin(freqX * x + freqY * y + phase), frequencies in rad/m.
struct SinusoidTerm {
  double amplitude = 0.0;
  double freqX = 0.0;
  double freqY = 0.0;
  double phase = 0.0;
};

struct TerrainSpec {
  double planeA = 0.0, planeB = 0.0, planeC = 0.0;  // z = a*x + b*y + c
  std::vector<SinusoidTerm> sinusoids;
};

struct BoxSpec {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct SceneSpec {
  Eigen::Vector2d boundsMin = Eigen::Vector2d(-10, -10);
  Eigen::Vector2d boundsMax = Eigen::Vector2d(10, 10);
  TerrainSpec terrain;
  std::vector<BoxSpec> boxes;     // pylons, cabinets, walls
  double referenceStep = 0.05;    // sampling pitch of the reference cloud
};

/// Analytic scene: heightfield terrain plus axis-aligned boxes, with a
/// densely sampled reference cloud carrying exact ground/non-ground labels.
struct Scene {
  SceneSpec spec;
  PointCloud referenceGround;
  PointCloud referenceNonground;

  double terrainHeight(double x, double y) const;
  double terrainGradientBound() const;  // bound on |grad terrain|
  double terrainUpperBound() const;     // bound on terrain over the scene bounds
  PointCloud referenceAll() const;
};

/// Throws std::invalid_argument (with the offending field) on a bad spec.
Scene buildScene(const SceneSpec& spec);

struct LidarModel {
  int rings = 16;
  double elevationMinDeg = -15.0;
  double elevationMaxDeg = 15.0;
  double horizontalResolutionDeg = 2.0;
  double maxRange = 30.0;
  double rangeNoiseSigma = 0.0;  // meters
  std::uint64_t seed = 0;
};

/// Raycast scan from the given sensor pose: per (ring, azimuth) ray, the
/// nearest terrain or box hit within maxRange, range perturbed by seeded
/// Gaussian noise. Points come back in the sensor frame; misses are dropped.
/// Noise streams derive from (seed, scanIndex, ring, azimuth), so results do
/// not depend on evaluation order and consecutive scans get fresh noise.
PointCloud simulateScan(const Scene& scene, const RigidTransform& pose, const LidarModel& model,
                        std::uint64_t scanIndex = 0);

struct TrajectorySpec {
  std::vector<Vec3> waypoints;  // map frame; z is height above terrain by default
  bool zAboveTerrain = true;
  double speed = 1.0;           // m/s along the polyline
  double rate = 10.0;           // scans per second
  int dwellTicks = 10;          // static scans emitted before motion starts
};

struct ScanSequence {
  std::vector<StampedScan> scans;
  std::vector<TimedPose> groundTruth;  // same length as scans
  PointCloud sceneReference;           // dense labeled scene sample
};

/// Poses interpolated along the waypoint polyline (linear position, slerped
/// yaw), one scan per tick at `rate`, after an initial static dwell.
ScanSequence generateSequence(const Scene& scene, const TrajectorySpec& trajectory,
                              const LidarModel& model);

/// Directory layout: sequence.txt manifest (timestamp + scan file per line),
/// scan_NNNNNN.pcd scans, ground_truth.tum, reference{,_ground,_nonground}.ply.
void saveSequence(const ScanSequence& sequence, const std::filesystem::path& dir,
                  const PointCloud* referenceGround = nullptr,
                  const PointCloud* referenceNonground = nullptr);
ScanSequence loadSequence(const std::filesystem::path& dir);

}  // namespace scanmap
