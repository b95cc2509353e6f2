#include <doctest.h>

#include <random>

#include "scanmap/kdtree.hpp"
#include "scanmap/registration.hpp"
#include "test_helpers.hpp"

using namespace scanmap;

TEST_CASE("bestRigidTransform is identity on identical clouds") {
  std::mt19937 rng(1);
  std::vector<Vec3> pts = testing::randomPoints(100, rng);
  RigidTransform t = bestRigidTransform(pts, pts);
  CHECK(t.translation.norm() < 1e-9);
  CHECK(rotationAngle(t.rotation) < 1e-9);
}

TEST_CASE("bestRigidTransform recovers a known transform to machine precision") {
  std::mt19937 rng(2);
  std::vector<Vec3> src = testing::randomPoints(200, rng);

  SUBCASE("30 degrees about z plus translation") {
    RigidTransform truth;
    truth.rotation = so3Exp(Vec3(0, 0, 30.0 * 3.14159265358979 / 180.0));
    truth.translation = Vec3(1, 2, 3);
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(truth.apply(p));
    RigidTransform got = bestRigidTransform(src, dst);
    CHECK((got.translation - truth.translation).norm() < 1e-9);
    CHECK(rotationDistance(got.rotation, truth.rotation) < 1e-9);
  }

  SUBCASE("100 random transforms") {
    for (int trial = 0; trial < 100; ++trial) {
      RigidTransform truth = testing::randomTransform(rng);
      std::vector<Vec3> dst;
      for (const Vec3& p : src) dst.push_back(truth.apply(p));
      RigidTransform got = bestRigidTransform(src, dst);
      CHECK((got.translation - truth.translation).norm() < 1e-9);
      CHECK(rotationDistance(got.rotation, truth.rotation) < 1e-9);
      CHECK(got.isValid(1e-9));
    }
  }
}

TEST_CASE("mirrored target still yields a proper rotation") {
  std::mt19937 rng(3);
  std::vector<Vec3> src = testing::randomPoints(50, rng);
  std::vector<Vec3> dst;
  for (const Vec3& p : src) dst.emplace_back(-p.x(), p.y(), p.z());
  RigidTransform t = bestRigidTransform(src, dst);
  CHECK(t.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bestRigidTransform rejects degenerate input") {
  std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(bestRigidTransform(two, two), std::invalid_argument);

  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 0, 0);
  CHECK_THROWS_AS(bestRigidTransform(line, line), std::invalid_argument);

  std::vector<Vec3> sizes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  std::vector<Vec3> fewer = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(bestRigidTransform(sizes, fewer), std::invalid_argument);
}

TEST_CASE("findCorrespondences pairs identical clouds with themselves") {
  std::mt19937 rng(4);
  PointCloud cloud;
  cloud.points = testing::randomPoints(200, rng);
  KdTree index(cloud.points);
  CorrespondenceSet corr = findCorrespondences(cloud, index, RigidTransform::identity(), 0.5);
  REQUIRE(corr.pairs.size() == cloud.size());
  for (const auto& c : corr.pairs) {
    CHECK(c.sourceIndex == c.targetIndex);
    CHECK(c.distance == 0.0);
  }
}

TEST_CASE("findCorrespondences matches the brute-force nearest point") {
  std::mt19937 rng(5);
  PointCloud source;
  source.points = testing::randomPoints(500, rng);
  std::vector<Vec3> target = testing::randomPoints(500, rng);
  KdTree index(target);
  RigidTransform t = testing::randomTransform(rng, 1.0, 0.5);

  CorrespondenceSet corr = findCorrespondences(source, index, t, 2.0);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    auto nn = bruteForceKnn(target, t.apply(source.points[i]), 1);
    REQUIRE(!nn.empty());
    if (nn[0].distance <= 2.0) {
      const auto& pair = corr.pairs[checked++];
      CHECK(pair.sourceIndex == static_cast<int>(i));
      CHECK(pair.targetIndex == nn[0].index);
      CHECK(pair.distance == doctest::Approx(nn[0].distance).epsilon(1e-12));
    }
  }
  CHECK(checked == corr.pairs.size());
}

TEST_CASE("far-apart clouds with a tight gate produce no pairs") {
  PointCloud source;
  source.add(0, 0, 0);
  KdTree index({Vec3(1, 0, 0)});
  CorrespondenceSet corr = findCorrespondences(source, index, RigidTransform::identity(), 0.001);
  CHECK(corr.pairs.empty());
}

TEST_CASE("fitnessScore basics") {
  PointCloud one;
  one.add(0, 0, 0);
  KdTree index({Vec3(0.1, 0, 0)});
  CHECK(fitnessScore(one, index, RigidTransform::identity(), 1.0) == doctest::Approx(0.01));

  PointCloud same;
  same.points = {Vec3(1, 1, 1), Vec3(2, 2, 2)};
  KdTree selfIndex(same.points);
  CHECK(fitnessScore(same, selfIndex, RigidTransform::identity(), 1.0) == 0.0);
}

TEST_CASE("fitnessScore equals brute-force mean of squared closest distances") {
  std::mt19937 rng(6);
  PointCloud source;
  source.points = testing::randomPoints(300, rng);
  std::vector<Vec3> target = testing::randomPoints(300, rng);
  KdTree index(target);

  double expected = 0.0;
  std::size_t count = 0;
  for (const Vec3& p : source.points) {
    auto nn = bruteForceKnn(target, p, 1);
    if (nn[0].distance <= 5.0) {
      expected += nn[0].distance * nn[0].distance;
      ++count;
    }
  }
  expected /= static_cast<double>(count);
  CHECK(fitnessScore(source, index, RigidTransform::identity(), 5.0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fitnessScore returns infinity when nothing matches") {
  PointCloud source;
  source.add(0, 0, 0);
  KdTree index({Vec3(100, 0, 0)});
  CHECK(std::isinf(fitnessScore(source, index, RigidTransform::identity(), 1.0)));
}

TEST_CASE("icp on identical clouds converges immediately") {
  std::mt19937 rng(7);
  PointCloud cloud;
  cloud.points = testing::randomPoints(300, rng);
  KdTree index(cloud.points);
  IcpResult result = icp(cloud, index, RigidTransform::identity(), IcpParams{});
  CHECK(result.converged);
  CHECK(result.iterationsUsed == 1);
  CHECK(result.fitness < 1e-20);
}

TEST_CASE("icp recovers a moderate perturbation on the room scene") {
  PointCloud scene = testing::boxRoomCloud();
  KdTree index(scene.points);

  RigidTransform truth;
  truth.rotation = so3Exp(Vec3(0.02, -0.03, 5.0 * 3.14159265358979 / 180.0));
  truth.translation = Vec3(0.15, -0.1, 0.05);
  PointCloud source = applyTransform(scene, invert(truth));

  IcpParams params;
  params.maxIterations = 60;
  params.maxCorrespondenceDistance = 1.0;
  IcpResult result = icp(source, index, RigidTransform::identity(), params);
  CHECK(result.converged);
  CHECK((result.transform.translation - truth.translation).norm() < 1e-3);
  CHECK(rotationDistance(result.transform.rotation, truth.rotation) < 0.1 * 3.14159 / 180.0);

  SUBCASE("per-iteration objective never increases within an iteration") {
    for (const auto& it : result.history) {
      CHECK(it.objectiveAfter <= it.objectiveBefore + 1e-12);
    }
  }
  SUBCASE("final fitness no worse than the initial guess fitness") {
    double guessFitness =
        fitnessScore(source, index, RigidTransform::identity(), params.fitnessMaxDistance);
    CHECK(result.fitness <= guessFitness + 1e-12);
  }
}

TEST_CASE("icp with a hopeless guess reports failure honestly") {
  PointCloud scene = testing::boxRoomCloud();
  KdTree index(scene.points);
  RigidTransform flipped;
  flipped.rotation = so3Exp(Vec3(0, 0, 3.14159265358979));  // 180 degrees off
  flipped.translation = Vec3(8.0, 8.0, 0.0);
  IcpParams params;
  params.maxIterations = 40;
  IcpResult result = icp(scene, index, flipped, params);
  // the asymmetric scene must not be explained away: either no convergence or
  // a fitness far above the initialization gate
  bool failedVisibly = !result.converged || result.fitness > 0.01;
  CHECK(failedVisibly);
}

TEST_CASE("icp with zero correspondences returns the infinity sentinel") {
  PointCloud source;
  source.add(0, 0, 0);
  source.add(1, 0, 0);
  source.add(0, 1, 0);
  KdTree index({Vec3(100, 100, 100), Vec3(101, 100, 100), Vec3(100, 101, 100)});
  IcpParams params;
  params.maxCorrespondenceDistance = 0.5;
  IcpResult result = icp(source, index, RigidTransform::identity(), params);
  CHECK_FALSE(result.converged);
  CHECK(std::isinf(result.fitness));
}

TEST_CASE("fitLocalPlane on coplanar neighbors") {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0),
                           Vec3(0.5, 0.5, 0)};
  KdTree index(pts);
  LocalPlane plane = fitLocalPlane(index, Vec3(0.5, 0.5, 0.2), 5, 0.1);
  REQUIRE(plane.valid);
  CHECK(std::abs(plane.normal.z()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(plane.signedDistance(Vec3(0.2, 0.7, 0))) < 1e-9);
}

TEST_CASE("fitLocalPlane rejects a corner-spanning neighborhood") {
  // floor patch (z=0) meeting a wall patch (x=0); no single plane fits both
  std::vector<Vec3> pts = {Vec3(0.2, 0.1, 0.0), Vec3(0.35, 0.3, 0.0), Vec3(0.15, 0.4, 0.0),
                           Vec3(0.0, 0.2, 0.25), Vec3(0.0, 0.35, 0.4)};
  KdTree index(pts);
  LocalPlane plane = fitLocalPlane(index, Vec3(0.1, 0.25, 0.1), 5, 0.05);
  CHECK_FALSE(plane.valid);
}

TEST_CASE("fitLocalPlane distance matches the analytic plane") {
  // inclined plane z = 0.5 x
  std::vector<Vec3> pts;
  for (double x = -1; x <= 1; x += 0.25) {
    for (double y = -1; y <= 1; y += 0.25) {
      pts.emplace_back(x, y, 0.5 * x);
    }
  }
  KdTree index(pts);
  Vec3 query(0.1, 0.0, 0.3);
  LocalPlane plane = fitLocalPlane(index, query, 5, 0.01);
  REQUIRE(plane.valid);
  double analytic = std::abs(0.5 * query.x() - query.z()) / std::sqrt(0.5 * 0.5 + 1.0);
  CHECK(std::abs(std::abs(plane.signedDistance(query)) - analytic) < 1e-9);
}

TEST_CASE("point-to-plane refinement") {
  // exactly planar patches: every valid local plane is exact
  PointCloud map = testing::triPlaneCloud();
  KdTree index(map.points);

  PointCloud scan;
  for (std::size_t i = 0; i < map.size(); i += 2) scan.add(map.points[i]);

  PointToPlaneParams params;
  params.icp.maxIterations = 30;

  SUBCASE("identity stays put with zero residuals") {
    IcpResult result = pointToPlaneRefine(scan, index, RigidTransform::identity(), params);
    CHECK(result.converged);
    CHECK(result.fitness < 1e-12);
    CHECK(result.transform.translation.norm() < 1e-9);
  }

  SUBCASE("recovers a small perturbation") {
    RigidTransform truth;
    truth.rotation = so3Exp(Vec3(0.0, 0.02, 2.0 * 3.14159265358979 / 180.0));
    truth.translation = Vec3(0.08, -0.05, 0.03);
    PointCloud moved = applyTransform(scan, invert(truth));
    IcpResult result = pointToPlaneRefine(moved, index, RigidTransform::identity(), params);
    CHECK(result.converged);
    CHECK((result.transform.translation - truth.translation).norm() < 5e-3);
    CHECK(rotationDistance(result.transform.rotation, truth.rotation) < 0.1 * 3.14159 / 180.0);
  }

  SUBCASE("too few valid planes reports non-convergence") {
    PointCloud tiny;
    tiny.add(100, 100, 100);  // nowhere near the map
    IcpResult result = pointToPlaneRefine(tiny, index, RigidTransform::identity(), params);
    CHECK_FALSE(result.converged);
  }
}

TEST_CASE("plane objective gradient matches central finite differences") {
  std::mt19937 rng(11);
  PointCloud map = testing::boxRoomCloud(6.0, 2.0, 0.15);
  KdTree index(map.points);
  PointCloud scan;
  for (std::size_t i = 0; i < map.size(); i += 3) scan.add(map.points[i]);

  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    RigidTransform pose;
    pose.rotation = so3Exp(Vec3(u(rng), u(rng), u(rng)));
    pose.translation = Vec3(u(rng), u(rng), u(rng));
    auto constraints = buildPlaneConstraints(scan, index, pose, 5, 0.1, 1.0);
    REQUIRE(constraints.size() > 10);

    PlaneObjective obj = evaluatePlaneObjective(constraints, pose);
    const double h = 1e-6;
    for (int dim = 0; dim < 6; ++dim) {
      Twist delta = Twist::Zero();
      delta[dim] = h;
      double plus = evaluatePlaneObjective(constraints, compose(se3Exp(delta), pose)).value;
      double minus = evaluatePlaneObjective(constraints, compose(se3Exp(-delta), pose)).value;
      double fd = (plus - minus) / (2.0 * h);
      double scale = std::max({std::abs(fd), std::abs(obj.gradient[dim]), 1e-8});
      CHECK(std::abs(fd - obj.gradient[dim]) / scale < 1e-4);
    }
  }
}

TEST_CASE("rotations from every registration path stay orthonormal") {
  std::mt19937 rng(12);
  PointCloud scene = testing::boxRoomCloud(6.0, 2.0, 0.2);
  KdTree index(scene.points);
  for (int trial = 0; trial < 5; ++trial) {
    RigidTransform guess = testing::randomTransform(rng, 0.3, 0.1);
    IcpResult a = icp(scene, index, guess, IcpParams{});
    CHECK(a.transform.isValid(1e-9));
    IcpResult b = pointToPlaneRefine(scene, index, guess, PointToPlaneParams{});
    CHECK(b.transform.isValid(1e-9));
  }
}
