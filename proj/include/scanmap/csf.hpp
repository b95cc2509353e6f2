#pragma once

#include <cstdint>
#include <vector>

#include "scanmap/point_cloud.hpp"

namespace scanmap {

struct CsfParams {
  double clothResolution = 0.5;      // particle spacing, meters
  double classThreshold = 0.1;       // point-to-cloth distance for the ground label
  int rigidness = 2;                 // spring relaxation passes per step, 1..3
  double timeStep = 0.05;            // seconds; gravity drop per step = g * dt^2
  double gravity = 9.8;              // m/s^2
  int maxIterations = 500;
  double displacementEpsilon = 1e-4; // meters, convergence on max particle motion
};

/// Simulated cloth draped over the inverted cloud. Particles live on a fixed
/// xy grid; only their height (inverted-frame z) evolves. A particle that
/// touches its collision height is clamped there and never moves again.
struct Cloth {
  int cols = 0, rows = 0;
  double spacing = 0.0;
  double originX = 0.0, originY = 0.0;  // xy of particle (0,0)
  std::vector<double> height;           // row-major, rows * cols
  std::vector<double> prevHeight;       // last step's heights (Verlet velocity state)
  std::vector<double> collision;        // inverted height of the nearest cell point; -inf if empty
  std::vector<std::uint8_t> movable;

  double& heightAt(int ix, int iy) { return height[static_cast<std::size_t>(iy) * cols + ix]; }
  double heightAt(int ix, int iy) const { return height[static_cast<std::size_t>(iy) * cols + ix]; }

  /// Bilinearly interpolated cloth height at an xy position (inverted frame).
  double interpolate(double x, double y) const;
};

/// Grid sized to the inverted cloud's xy bounding box plus one spacing of
/// margin, initialized flat above the highest inverted point.
/// Throws std::invalid_argument for an empty cloud or zero xy extent.
Cloth initCloth(const std::vector<Vec3>& invertedPoints, const CsfParams& params);

/// One Verlet gravity step + collision clamp + rigidness spring passes,
/// Jacobi-style (deterministic). Velocity accumulates across steps so the
/// cloth keeps sinking into concave regions instead of hovering; clamping
/// zeroes it. Returns the largest absolute height change of this step.
double simulateClothStep(Cloth& cloth, const CsfParams& params);

struct CsfResult {
  PointCloud ground;
  PointCloud nonground;
  std::vector<std::uint8_t> isGround;  // per input point, input order
  int iterationsUsed = 0;
};

/// Cloth-simulation ground filter: drapes a cloth over the inverted cloud and
/// labels points within classThreshold of the settled cloth as ground. The
/// two output clouds partition the input, each preserving input order.
CsfResult csfExtract(const PointCloud& cloud, const CsfParams& params);

}  // namespace scanmap
