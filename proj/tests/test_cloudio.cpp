#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "scanmap/cloud_io.hpp"
#include "scanmap/normal_estimation.hpp"
#include "scanmap/point_cloud.hpp"
#include "scanmap/transform.hpp"
#include "test_helpers.hpp"

using namespace scanmap;

namespace {

std::filesystem::path tempFile(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "scanmap_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("rigid transform compose/invert round trips") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    RigidTransform t = testing::randomTransform(rng);
    CHECK(t.isValid(1e-9));
    RigidTransform round = compose(t, invert(t));
    CHECK(round.translation.norm() < 1e-9);
    CHECK(rotationAngle(round.rotation) < 1e-9);

    Vec3 p = testing::randomPoints(1, rng)[0];
    Vec3 back = invert(t).apply(t.apply(p));
    CHECK((back - p).norm() < 1e-9);
  }

  RigidTransform identity;
  RigidTransform inv = invert(identity);
  CHECK(inv.translation.norm() == 0.0);
  CHECK((inv.rotation - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("compose of pure translations sums them") {
  RigidTransform a, b;
  a.translation = Vec3(1, 2, 3);
  b.translation = Vec3(-4, 0, 2);
  RigidTransform ab = compose(a, b);
  CHECK((ab.translation - Vec3(-3, 2, 5)).norm() == 0.0);
}

TEST_CASE("se3 exp/log round trip") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Twist xi;
    for (int i = 0; i < 6; ++i) xi[i] = u(rng);
    Twist back = se3Log(se3Exp(xi));
    CHECK((back - xi).norm() < 1e-9);
  }
  CHECK(se3Exp(Twist::Zero()).isValid(1e-12));
}

TEST_CASE("applyTransform basics") {
  PointCloud cloud;
  cloud.add(0, 0, 0);
  cloud.add(1, 0, 0);

  SUBCASE("identity is exact") {
    PointCloud out = applyTransform(cloud, RigidTransform::identity());
    CHECK(out.points[0] == cloud.points[0]);
    CHECK(out.points[1] == cloud.points[1]);
  }

  SUBCASE("pure translation") {
    RigidTransform t;
    t.translation = Vec3(1, 0, 0);
    PointCloud out = applyTransform(cloud, t);
    CHECK((out.points[0] - Vec3(1, 0, 0)).norm() == 0.0);
  }

  SUBCASE("composition equals sequential application") {
    std::mt19937 rng(3);
    RigidTransform t1 = testing::randomTransform(rng);
    RigidTransform t2 = testing::randomTransform(rng);
    PointCloud once = applyTransform(cloud, compose(t2, t1));
    PointCloud twice = applyTransform(applyTransform(cloud, t1), t2);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK((once.points[i] - twice.points[i]).norm() < 1e-9);
    }
  }

  SUBCASE("isometry: pairwise distances preserved") {
    std::mt19937 rng(5);
    PointCloud pts;
    pts.points = testing::randomPoints(50, rng);
    RigidTransform t = testing::randomTransform(rng);
    PointCloud moved = applyTransform(pts, t);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double before = (pts.points[i] - pts.points[i + 1]).norm();
      double after = (moved.points[i] - moved.points[i + 1]).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
  }
}

TEST_CASE("PLY with zero vertices loads as empty cloud") {
  auto path = tempFile("empty.ply");
  {
    std::ofstream out(path);
    out << "ply\nformat ascii 1.0\nelement vertex 0\n"
           "property float x\nproperty float y\nproperty float z\nend_header\n";
  }
  PointCloud cloud = loadCloud(path);
  CHECK(cloud.size() == 0);
}

TEST_CASE("hand-written PCD fixture parses exactly") {
  auto path = tempFile("three.pcd");
  {
    std::ofstream out(path);
    out << "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n"
           "FIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
           "WIDTH 3\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 3\nDATA ascii\n"
           "0 0 0\n1 0 0\n0 1 0\n";
  }
  PointCloud cloud = loadCloud(path);
  REQUIRE(cloud.size() == 3);
  CHECK(cloud.points[0] == Vec3(0, 0, 0));
  CHECK(cloud.points[1] == Vec3(1, 0, 0));
  CHECK(cloud.points[2] == Vec3(0, 1, 0));
  CHECK_FALSE(cloud.hasNormals());
}

TEST_CASE("save/load round trip preserves points and normals") {
  std::mt19937 rng(17);
  PointCloud cloud;
  cloud.points = testing::randomPoints(200, rng, 50.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Vec3 n(std::sin(0.1 * i), std::cos(0.3 * i), 1.0);
    cloud.normals.push_back(n.normalized());
  }

  for (CloudFormat format : {CloudFormat::PLY, CloudFormat::PCD}) {
    auto path = tempFile(format == CloudFormat::PLY ? "roundtrip.ply" : "roundtrip.pcd");
    saveCloud(cloud, path, format);
    PointCloud back = loadCloud(path);
    REQUIRE(back.size() == cloud.size());
    REQUIRE(back.hasNormals());
    back.validate();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK((back.points[i] - cloud.points[i]).norm() < 1e-6);
      CHECK((back.normals[i] - cloud.normals[i]).norm() < 1e-6);
    }
  }
}

TEST_CASE("empty cloud saves to a loadable header-only file") {
  PointCloud cloud;
  for (CloudFormat format : {CloudFormat::PLY, CloudFormat::PCD}) {
    auto path = tempFile(format == CloudFormat::PLY ? "empty_out.ply" : "empty_out.pcd");
    saveCloud(cloud, path, format);
    CHECK(loadCloud(path).size() == 0);
  }
}

TEST_CASE("single point with normal writes one full record") {
  PointCloud cloud;
  cloud.add(1, 2, 3);
  cloud.normals.push_back(Vec3(0, 0, 1));
  auto path = tempFile("single.ply");
  saveCloud(cloud, path, CloudFormat::PLY);
  PointCloud back = loadCloud(path);
  REQUIRE(back.size() == 1);
  REQUIRE(back.hasNormals());
  CHECK((back.points[0] - Vec3(1, 2, 3)).norm() < 1e-9);
  CHECK((back.normals[0] - Vec3(0, 0, 1)).norm() < 1e-9);
}

TEST_CASE("parse errors carry the line number") {
  SUBCASE("binary PLY rejected") {
    auto path = tempFile("binary.ply");
    std::ofstream(path) << "ply\nformat binary_little_endian 1.0\nend_header\n";
    CHECK_THROWS_WITH_AS(loadCloud(path), doctest::Contains(":2:"), ParseError);
  }
  SUBCASE("non-finite coordinate rejected") {
    auto path = tempFile("nan.pcd");
    std::ofstream(path) << "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
                           "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\nnan 0 0\n";
    CHECK_THROWS_AS(loadCloud(path), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(loadCloud("/nonexistent/x.ply"), ParseError); }
  SUBCASE("truncated vertex data") {
    auto path = tempFile("short.ply");
    std::ofstream(path) << "ply\nformat ascii 1.0\nelement vertex 2\n"
                           "property float x\nproperty float y\nproperty float z\nend_header\n"
                           "0 0 0\n";
    CHECK_THROWS_AS(loadCloud(path), ParseError);
  }
}

TEST_CASE("estimateNormals on planar data") {
  PointCloud plane;
  for (double x = 0; x <= 2.0; x += 0.1) {
    for (double y = 0; y <= 2.0; y += 0.1) {
      plane.add(x, y, 0.0);
    }
  }

  SUBCASE("z=0 plane, viewpoint above") {
    auto result = estimateNormals(plane, 8, Vec3(0, 0, 10));
    for (const Vec3& n : result.cloud.normals) {
      CHECK((n - Vec3(0, 0, 1)).norm() < 1e-6);
    }
  }

  SUBCASE("x=0 plane, viewpoint in front") {
    PointCloud wall;
    for (double y = 0; y <= 2.0; y += 0.1) {
      for (double z = 0; z <= 2.0; z += 0.1) {
        wall.add(0.0, y, z);
      }
    }
    auto result = estimateNormals(wall, 8, Vec3(10, 0, 0));
    for (const Vec3& n : result.cloud.normals) {
      CHECK((n - Vec3(1, 0, 0)).norm() < 1e-6);
    }
  }

  SUBCASE("noisy plane: mean angular error under 5 degrees") {
    std::mt19937 rng(23);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    PointCloud noisy;
    for (int i = 0; i < 300; ++i) {
      noisy.add(pos(rng), pos(rng), noise(rng));
    }
    auto result = estimateNormals(noisy, 15, Vec3(0, 0, 10));
    double sumAngle = 0.0;
    for (const Vec3& n : result.cloud.normals) {
      sumAngle += std::acos(std::clamp(n.dot(Vec3(0, 0, 1)), -1.0, 1.0));
    }
    double meanDeg = sumAngle / result.cloud.size() * 180.0 / 3.14159265358979;
    CHECK(meanDeg < 5.0);
  }

  SUBCASE("normals rotate with the cloud") {
    auto base = estimateNormals(plane, 8, Vec3(0, 0, 10));
    RigidTransform t;
    t.rotation = so3Exp(Vec3(0.4, -0.2, 0.9));
    t.translation = Vec3(1, 2, 3);
    PointCloud moved = applyTransform(plane, t);
    auto turned = estimateNormals(moved, 8, t.apply(Vec3(0, 0, 10)));
    for (std::size_t i = 0; i < plane.size(); ++i) {
      Vec3 expected = t.rotation * base.cloud.normals[i];
      CHECK(std::acos(std::clamp(expected.dot(turned.cloud.normals[i]), -1.0, 1.0)) < 1e-6);
    }
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(estimateNormals(plane, 2, Vec3::Zero()), std::invalid_argument);
    PointCloud tiny;
    tiny.add(0, 0, 0);
    CHECK_THROWS_AS(estimateNormals(tiny, 3, Vec3::Zero()), std::invalid_argument);
  }
}

TEST_CASE("degenerate neighborhoods flagged, not fatal") {
  PointCloud cloud;
  for (int i = 0; i < 10; ++i) cloud.add(0, 0, 0);  // all coincident
  auto result = estimateNormals(cloud, 5, Vec3(0, 0, 10));
  CHECK(result.degenerateCount == 10);
  for (const Vec3& n : result.cloud.normals) {
    CHECK((n - Vec3(0, 0, 1)).norm() < 1e-12);
  }
}

TEST_CASE("PointCloud validation catches bad data") {
  PointCloud bad;
  bad.add(0, 0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  PointCloud mismatch;
  mismatch.add(0, 0, 0);
  mismatch.add(1, 1, 1);
  mismatch.normals.push_back(Vec3(0, 0, 1));
  CHECK_THROWS_AS(mismatch.validate(), std::invalid_argument);

  PointCloud notUnit;
  notUnit.add(0, 0, 0);
  notUnit.normals.push_back(Vec3(0, 0, 2));
  CHECK_THROWS_AS(notUnit.validate(), std::invalid_argument);
}
