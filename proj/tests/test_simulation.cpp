#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "scanmap/simulation.hpp"
#include "test_helpers.hpp"

using namespace scanmap;

namespace {

constexpr double kPi = 3.14159265358979323846;

SceneSpec flatSpec(double half = 6.0) {
  SceneSpec spec;
  spec.boundsMin = Eigen::Vector2d(-half, -half);
  spec.boundsMax = Eigen::Vector2d(half, half);
  spec.referenceStep = 0.1;
  return spec;
}

}  // namespace

TEST_CASE("flat-plane scene reference is entirely ground") {
  Scene scene = buildScene(flatSpec());
  CHECK(scene.referenceNonground.empty());
  CHECK(scene.referenceGround.size() > 1000);
  for (const Vec3& p : scene.referenceGround.points) CHECK(p.z() == 0.0);
}

TEST_CASE("plane plus box partitions the reference cloud") {
  SceneSpec spec = flatSpec();
  spec.boxes.push_back({Vec3(1, 1, 0), Vec3(2, 2, 1)});
  Scene scene = buildScene(spec);
  CHECK(!scene.referenceNonground.empty());
  CHECK(scene.referenceAll().size() ==
        scene.referenceGround.size() + scene.referenceNonground.size());
  for (const Vec3& p : scene.referenceGround.points) {
    bool insideBox = p.x() > 1.0 && p.x() < 2.0 && p.y() > 1.0 && p.y() < 2.0;
    CHECK_FALSE(insideBox);
  }
}

TEST_CASE("sinusoid amplitude bounds the reference heights") {
  SceneSpec spec = flatSpec();
  spec.terrain.sinusoids.push_back({0.4, 0.9, 0.0, 0.0});
  Scene scene = buildScene(spec);
  double maxAbs = 0.0;
  for (const Vec3& p : scene.referenceGround.points) maxAbs = std::max(maxAbs, std::abs(p.z()));
  CHECK(maxAbs <= 0.4 + 1e-9);
  CHECK(maxAbs > 0.39);  // the extremum is reached up to sampling error
}

TEST_CASE("bad scene specs fail with the field named") {
  SceneSpec spec = flatSpec();
  spec.boxes.push_back({Vec3(5, 5, 0), Vec3(4, 6, 1)});  // min > max
  CHECK_THROWS_WITH_AS(buildScene(spec), doctest::Contains("boxes[0]"), std::invalid_argument);

  SceneSpec outside = flatSpec();
  outside.boxes.push_back({Vec3(5, 5, 0), Vec3(7, 6, 1)});  // leaves the bounds
  CHECK_THROWS_AS(buildScene(outside), std::invalid_argument);
}

TEST_CASE("downward rays from 1 m above the plane land on it exactly") {
  Scene scene = buildScene(flatSpec());
  LidarModel model;
  model.rangeNoiseSigma = 0.0;
  RigidTransform pose;
  pose.translation = Vec3(0, 0, 1.0);

  PointCloud scan = simulateScan(scene, pose, model);
  REQUIRE(scan.size() > 500);
  int groundHits = 0;
  for (const Vec3& p : scan.points) {
    Vec3 world = pose.apply(p);
    CHECK(std::abs(world.z() - scene.terrainHeight(world.x(), world.y())) < 1e-6);
    ++groundHits;
  }
  CHECK(groundHits > 0);
}

TEST_CASE("zero-noise scans lie on scene surfaces in a box scene") {
  SceneSpec spec = flatSpec();
  spec.boxes.push_back({Vec3(2, -1, 0), Vec3(3, 1, 1.5)});
  Scene scene = buildScene(spec);
  LidarModel model;
  RigidTransform pose;
  pose.translation = Vec3(-2, 0, 0.8);

  PointCloud scan = simulateScan(scene, pose, model);
  REQUIRE(scan.size() > 200);
  for (const Vec3& p : scan.points) {
    Vec3 w = pose.apply(p);
    double dTerrain = std::abs(w.z() - scene.terrainHeight(w.x(), w.y()));
    // distance to the closest box face plane, when on the box shell
    const BoxSpec& box = spec.boxes[0];
    double dBox = std::numeric_limits<double>::infinity();
    if (w.x() > box.min.x() - 1e-6 && w.x() < box.max.x() + 1e-6 &&
        w.y() > box.min.y() - 1e-6 && w.y() < box.max.y() + 1e-6 &&
        w.z() > box.min.z() - 1e-6 && w.z() < box.max.z() + 1e-6) {
      dBox = std::min({std::abs(w.x() - box.min.x()), std::abs(w.x() - box.max.x()),
                       std::abs(w.y() - box.min.y()), std::abs(w.y() - box.max.y()),
                       std::abs(w.z() - box.max.z())});
    }
    CHECK(std::min(dTerrain, dBox) < 1e-6);
  }
}

TEST_CASE("same seed reproduces a noisy scan bitwise") {
  Scene scene = buildScene(flatSpec());
  LidarModel model;
  model.rangeNoiseSigma = 0.02;
  model.seed = 1234;
  RigidTransform pose;
  pose.translation = Vec3(0.5, -0.3, 1.1);

  PointCloud a = simulateScan(scene, pose, model, 7);
  PointCloud b = simulateScan(scene, pose, model, 7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i] == b.points[i]);
  }

  PointCloud c = simulateScan(scene, pose, model, 8);  // different scan index
  bool anyDifferent = c.size() != a.size();
  for (std::size_t i = 0; !anyDifferent && i < std::min(a.size(), c.size()); ++i) {
    anyDifferent = a.points[i] != c.points[i];
  }
  CHECK(anyDifferent);
}

TEST_CASE("max range below the terrain distance yields an empty scan") {
  Scene scene = buildScene(flatSpec());
  LidarModel model;
  model.maxRange = 0.5;
  RigidTransform pose;
  pose.translation = Vec3(0, 0, 2.0);  // nearest surface 2 m below
  CHECK(simulateScan(scene, pose, model).empty());
}

TEST_CASE("single-waypoint sequence dwells in place") {
  Scene scene = buildScene(flatSpec());
  TrajectorySpec traj;
  traj.waypoints = {Vec3(0, 0, 1.0)};
  traj.dwellTicks = 10;
  LidarModel model;
  ScanSequence seq = generateSequence(scene, traj, model);
  REQUIRE(seq.scans.size() == 10);
  REQUIRE(seq.groundTruth.size() == 10);
  for (const TimedPose& tp : seq.groundTruth) {
    CHECK((tp.pose.translation - seq.groundTruth[0].pose.translation).norm() == 0.0);
  }
  for (std::size_t i = 1; i < seq.scans.size(); ++i) {
    CHECK(seq.scans[i].timestamp > seq.scans[i - 1].timestamp);
  }
}

TEST_CASE("straight 10 m path at 1 m/s and 10 Hz gives 101 poses 0.1 m apart") {
  Scene scene = buildScene(flatSpec());
  TrajectorySpec traj;
  traj.waypoints = {Vec3(-5, 0, 1.0), Vec3(5, 0, 1.0)};
  traj.dwellTicks = 0;
  traj.speed = 1.0;
  traj.rate = 10.0;
  LidarModel model;
  model.rings = 1;  // keep it cheap
  model.horizontalResolutionDeg = 30.0;
  ScanSequence seq = generateSequence(scene, traj, model);
  REQUIRE(seq.groundTruth.size() == 101);
  for (std::size_t i = 1; i < seq.groundTruth.size(); ++i) {
    double step =
        (seq.groundTruth[i].pose.translation - seq.groundTruth[i - 1].pose.translation).norm();
    CHECK(step == doctest::Approx(0.1).epsilon(1e-9));
  }
}

TEST_CASE("sequence save/load round trip") {
  Scene scene = buildScene(flatSpec(3.0));
  TrajectorySpec traj;
  traj.waypoints = {Vec3(0, 0, 1.0), Vec3(1, 0, 1.0)};
  traj.dwellTicks = 2;
  traj.rate = 5.0;
  LidarModel model;
  model.rings = 4;
  model.horizontalResolutionDeg = 10.0;
  model.rangeNoiseSigma = 0.005;
  model.seed = 9;
  ScanSequence seq = generateSequence(scene, traj, model);

  auto dir = std::filesystem::temp_directory_path() / "scanmap_seq_test";
  std::filesystem::remove_all(dir);
  saveSequence(seq, dir);
  ScanSequence back = loadSequence(dir);

  REQUIRE(back.scans.size() == seq.scans.size());
  REQUIRE(back.groundTruth.size() == seq.groundTruth.size());
  for (std::size_t i = 0; i < seq.scans.size(); ++i) {
    CHECK(back.scans[i].timestamp == doctest::Approx(seq.scans[i].timestamp).epsilon(1e-9));
    REQUIRE(back.scans[i].cloud.size() == seq.scans[i].cloud.size());
    for (std::size_t j = 0; j < seq.scans[i].cloud.size(); ++j) {
      CHECK((back.scans[i].cloud.points[j] - seq.scans[i].cloud.points[j]).norm() < 1e-6);
    }
  }
  for (std::size_t i = 0; i < seq.groundTruth.size(); ++i) {
    CHECK((back.groundTruth[i].pose.translation - seq.groundTruth[i].pose.translation).norm() <
          1e-6);
    CHECK(rotationDistance(back.groundTruth[i].pose.rotation, seq.groundTruth[i].pose.rotation) <
          1e-6);
  }
}

TEST_CASE("heading turns smoothly through waypoints") {
  Scene scene = buildScene(flatSpec());
  TrajectorySpec traj;
  traj.waypoints = {Vec3(-4, -4, 1.0), Vec3(0, -4, 1.0), Vec3(0, 4, 1.0)};
  traj.dwellTicks = 0;
  traj.speed = 2.0;
  traj.rate = 10.0;
  LidarModel model;
  model.rings = 1;
  model.horizontalResolutionDeg = 60.0;
  ScanSequence seq = generateSequence(scene, traj, model);
  // yaw starts east (0) and ends north (pi/2), never exceeding the turn
  for (std::size_t i = 1; i < seq.groundTruth.size(); ++i) {
    double dyaw = rotationDistance(seq.groundTruth[i - 1].pose.rotation,
                                   seq.groundTruth[i].pose.rotation);
    CHECK(dyaw < 0.2);  // no jumps
  }
  double endYaw = rotationAngle(seq.groundTruth.back().pose.rotation);
  CHECK(endYaw == doctest::Approx(kPi / 2).epsilon(1e-6));
}
