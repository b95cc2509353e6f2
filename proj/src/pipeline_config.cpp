#include "scanmap/pipeline_config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace scanmap {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void checkKeys(const YAML::Node& node, const std::string& path,
               std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) fail(path, "expected a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) fail(path + "." + key, "unknown key");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& path, const char* key, T& out) {
  YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    fail(path + "." + key, "cannot parse value");
  }
}

Vec3 readVec3(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 3) fail(path, "expected [x, y, z]");
  return Vec3(node[0].as<double>(), node[1].as<double>(), node[2].as<double>());
}

Eigen::Vector2d readVec2(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 2) fail(path, "expected [x, y]");
  return Eigen::Vector2d(node[0].as<double>(), node[1].as<double>());
}

void parseScene(const YAML::Node& node, SceneSpec& scene) {
  checkKeys(node, "scene", {"bounds", "terrain", "boxes", "reference_step"});
  if (YAML::Node b = node["bounds"]) {
    checkKeys(b, "scene.bounds", {"min", "max"});
    if (b["min"]) scene.boundsMin = readVec2(b["min"], "scene.bounds.min");
    if (b["max"]) scene.boundsMax = readVec2(b["max"], "scene.bounds.max");
  }
  if (YAML::Node t = node["terrain"]) {
    checkKeys(t, "scene.terrain", {"plane", "sinusoids"});
    if (YAML::Node p = t["plane"]) {
      Vec3 abc = readVec3(p, "scene.terrain.plane");
      scene.terrain.planeA = abc.x();
      scene.terrain.planeB = abc.y();
      scene.terrain.planeC = abc.z();
    }
    if (YAML::Node sins = t["sinusoids"]) {
      if (!sins.IsSequence()) fail("scene.terrain.sinusoids", "expected a list");
      for (std::size_t i = 0; i < sins.size(); ++i) {
        std::string p = "scene.terrain.sinusoids[" + std::to_string(i) + "]";
        checkKeys(sins[i], p, {"amplitude", "freq_x", "freq_y", "phase"});
        SinusoidTerm term;
        read(sins[i], p, "amplitude", term.amplitude);
        read(sins[i], p, "freq_x", term.freqX);
        read(sins[i], p, "freq_y", term.freqY);
        read(sins[i], p, "phase", term.phase);
        scene.terrain.sinusoids.push_back(term);
      }
    }
  }
  if (YAML::Node boxes = node["boxes"]) {
    if (!boxes.IsSequence()) fail("scene.boxes", "expected a list");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      std::string p = "scene.boxes[" + std::to_string(i) + "]";
      checkKeys(boxes[i], p, {"min", "max"});
      BoxSpec box;
      if (boxes[i]["min"]) box.min = readVec3(boxes[i]["min"], p + ".min");
      if (boxes[i]["max"]) box.max = readVec3(boxes[i]["max"], p + ".max");
      scene.boxes.push_back(box);
    }
  }
  read(node, "scene", "reference_step", scene.referenceStep);
}

void parseLidar(const YAML::Node& node, LidarModel& lidar) {
  checkKeys(node, "lidar",
            {"rings", "elevation_min_deg", "elevation_max_deg", "horizontal_resolution_deg",
             "max_range", "range_noise_sigma", "seed"});
  read(node, "lidar", "rings", lidar.rings);
  read(node, "lidar", "elevation_min_deg", lidar.elevationMinDeg);
  read(node, "lidar", "elevation_max_deg", lidar.elevationMaxDeg);
  read(node, "lidar", "horizontal_resolution_deg", lidar.horizontalResolutionDeg);
  read(node, "lidar", "max_range", lidar.maxRange);
  read(node, "lidar", "range_noise_sigma", lidar.rangeNoiseSigma);
  read(node, "lidar", "seed", lidar.seed);
}

void parseTrajectory(const YAML::Node& node, TrajectorySpec& traj) {
  checkKeys(node, "trajectory", {"waypoints", "z_above_terrain", "speed", "rate", "dwell_ticks"});
  if (YAML::Node wps = node["waypoints"]) {
    if (!wps.IsSequence()) fail("trajectory.waypoints", "expected a list");
    traj.waypoints.clear();
    for (std::size_t i = 0; i < wps.size(); ++i) {
      traj.waypoints.push_back(readVec3(wps[i], "trajectory.waypoints[" + std::to_string(i) + "]"));
    }
  }
  read(node, "trajectory", "z_above_terrain", traj.zAboveTerrain);
  read(node, "trajectory", "speed", traj.speed);
  read(node, "trajectory", "rate", traj.rate);
  read(node, "trajectory", "dwell_ticks", traj.dwellTicks);
}

void parseIcp(const YAML::Node& node, const std::string& path, IcpParams& icp) {
  checkKeys(node, path,
            {"max_iterations", "max_correspondence_distance", "translation_epsilon",
             "rotation_epsilon", "fitness_threshold", "fitness_max_distance"});
  read(node, path, "max_iterations", icp.maxIterations);
  read(node, path, "max_correspondence_distance", icp.maxCorrespondenceDistance);
  read(node, path, "translation_epsilon", icp.translationEpsilon);
  read(node, path, "rotation_epsilon", icp.rotationEpsilon);
  read(node, path, "fitness_threshold", icp.fitnessThreshold);
  read(node, path, "fitness_max_distance", icp.fitnessMaxDistance);
}

void parseLocalizer(const YAML::Node& node, LocalizerConfig& loc) {
  checkKeys(node, "localizer",
            {"init_scan_count", "init_fitness_threshold", "map_update_enable_time",
             "scan_downsample_voxel", "velocity_smoothing", "map_rebuild_ratio", "icp", "refine"});
  read(node, "localizer", "init_scan_count", loc.initScanCount);
  read(node, "localizer", "init_fitness_threshold", loc.initFitnessThreshold);
  read(node, "localizer", "map_update_enable_time", loc.mapUpdateEnableTime);
  read(node, "localizer", "scan_downsample_voxel", loc.scanDownsampleVoxel);
  read(node, "localizer", "velocity_smoothing", loc.velocitySmoothing);
  read(node, "localizer", "map_rebuild_ratio", loc.mapRebuildRatio);
  if (YAML::Node icp = node["icp"]) parseIcp(icp, "localizer.icp", loc.icpParams);
  if (YAML::Node refine = node["refine"]) {
    checkKeys(refine, "localizer.refine",
              {"plane_neighbors", "max_plane_distance", "min_valid_planes", "max_iterations",
               "max_correspondence_distance", "translation_epsilon", "rotation_epsilon"});
    read(refine, "localizer.refine", "plane_neighbors", loc.refineParams.planeNeighbors);
    read(refine, "localizer.refine", "max_plane_distance", loc.refineParams.maxPlaneDistance);
    read(refine, "localizer.refine", "min_valid_planes", loc.refineParams.minValidPlanes);
    read(refine, "localizer.refine", "max_iterations", loc.refineParams.icp.maxIterations);
    read(refine, "localizer.refine", "max_correspondence_distance",
         loc.refineParams.icp.maxCorrespondenceDistance);
    read(refine, "localizer.refine", "translation_epsilon",
         loc.refineParams.icp.translationEpsilon);
    read(refine, "localizer.refine", "rotation_epsilon", loc.refineParams.icp.rotationEpsilon);
  }
}

void validate(const PipelineConfig& cfg) {
  if (cfg.craftSampling.voxelSize <= 0.0) fail("craft.voxel_size", "must be > 0");
  if (cfg.craftMls.searchRadius <= 0.0) fail("craft.search_radius", "must be > 0");
  if (cfg.craftMls.gaussianScale <= 0.0) fail("craft.gaussian_scale", "must be > 0");
  if (cfg.craftMls.polynomialOrder < 1 || cfg.craftMls.polynomialOrder > 2) {
    fail("craft.polynomial_order", "must be 1 or 2");
  }
  if (cfg.ground.clothResolution <= 0.0) fail("ground.cloth_resolution", "must be > 0");
  if (cfg.ground.classThreshold <= 0.0) fail("ground.class_threshold", "must be > 0");
  if (cfg.ground.rigidness < 1 || cfg.ground.rigidness > 3) fail("ground.rigidness", "must be 1..3");
  if (cfg.ground.timeStep <= 0.0 || cfg.ground.gravity <= 0.0) {
    fail("ground.time_step/gravity", "must be > 0");
  }
  if (cfg.traverse.cellSize <= 0.0) fail("traverse.cell_size", "must be > 0");
  if (cfg.traverse.normalRadius <= 0.0 || cfg.traverse.roughnessRadius <= 0.0) {
    fail("traverse.normal_radius/roughness_radius", "must be > 0");
  }
  if (cfg.traverse.slopeCritical <= 0.0 || cfg.traverse.roughnessCritical <= 0.0) {
    fail("traverse.slope_critical/roughness_critical", "must be > 0");
  }
  if (cfg.traverse.slopeWeight < 0.0 || cfg.traverse.roughnessWeight < 0.0 ||
      std::abs(cfg.traverse.slopeWeight + cfg.traverse.roughnessWeight - 1.0) > 1e-9) {
    fail("traverse.slope_weight/roughness_weight", "must be nonnegative and sum to 1");
  }
  if (cfg.traverse.costCutoff < 0.0 || cfg.traverse.costCutoff > 1.0) {
    fail("traverse.cost_cutoff", "must be in [0, 1]");
  }
  if (cfg.localizer.initScanCount < 1) fail("localizer.init_scan_count", "must be >= 1");
  if (cfg.localizer.initFitnessThreshold <= 0.0) {
    fail("localizer.init_fitness_threshold", "must be > 0");
  }
  if (cfg.localizer.scanDownsampleVoxel <= 0.0) {
    fail("localizer.scan_downsample_voxel", "must be > 0");
  }
  if (cfg.evalOutlierThreshold <= 0.0) fail("eval.outlier_threshold", "must be > 0");
}

PipelineConfig parseRoot(const YAML::Node& root) {
  PipelineConfig cfg;
  if (root.IsNull() || !root.IsDefined()) return cfg;
  checkKeys(root, "<root>",
            {"seed", "threads", "scene", "lidar", "trajectory", "craft", "ground", "traverse",
             "localizer", "eval"});
  read(root, "<root>", "seed", cfg.seed);
  read(root, "<root>", "threads", cfg.threads);
  if (YAML::Node n = root["scene"]) parseScene(n, cfg.scene);
  if (YAML::Node n = root["lidar"]) parseLidar(n, cfg.lidar);
  if (YAML::Node n = root["trajectory"]) parseTrajectory(n, cfg.trajectory);
  if (YAML::Node n = root["craft"]) {
    checkKeys(n, "craft", {"voxel_size", "search_radius", "polynomial_order", "gaussian_scale"});
    read(n, "craft", "voxel_size", cfg.craftSampling.voxelSize);
    read(n, "craft", "search_radius", cfg.craftMls.searchRadius);
    read(n, "craft", "polynomial_order", cfg.craftMls.polynomialOrder);
    read(n, "craft", "gaussian_scale", cfg.craftMls.gaussianScale);
  }
  if (YAML::Node n = root["ground"]) {
    checkKeys(n, "ground",
              {"cloth_resolution", "class_threshold", "rigidness", "time_step", "gravity",
               "max_iterations", "displacement_epsilon"});
    read(n, "ground", "cloth_resolution", cfg.ground.clothResolution);
    read(n, "ground", "class_threshold", cfg.ground.classThreshold);
    read(n, "ground", "rigidness", cfg.ground.rigidness);
    read(n, "ground", "time_step", cfg.ground.timeStep);
    read(n, "ground", "gravity", cfg.ground.gravity);
    read(n, "ground", "max_iterations", cfg.ground.maxIterations);
    read(n, "ground", "displacement_epsilon", cfg.ground.displacementEpsilon);
  }
  if (YAML::Node n = root["traverse"]) {
    checkKeys(n, "traverse",
              {"cell_size", "normal_radius", "roughness_radius", "slope_critical",
               "roughness_critical", "slope_weight", "roughness_weight", "cost_cutoff"});
    read(n, "traverse", "cell_size", cfg.traverse.cellSize);
    read(n, "traverse", "normal_radius", cfg.traverse.normalRadius);
    read(n, "traverse", "roughness_radius", cfg.traverse.roughnessRadius);
    read(n, "traverse", "slope_critical", cfg.traverse.slopeCritical);
    read(n, "traverse", "roughness_critical", cfg.traverse.roughnessCritical);
    read(n, "traverse", "slope_weight", cfg.traverse.slopeWeight);
    read(n, "traverse", "roughness_weight", cfg.traverse.roughnessWeight);
    read(n, "traverse", "cost_cutoff", cfg.traverse.costCutoff);
  }
  if (YAML::Node n = root["localizer"]) parseLocalizer(n, cfg.localizer);
  if (YAML::Node n = root["eval"]) {
    checkKeys(n, "eval", {"outlier_threshold"});
    read(n, "eval", "outlier_threshold", cfg.evalOutlierThreshold);
  }
  validate(cfg);
  return cfg;
}

}  // namespace

PipelineConfig parsePipelineConfig(const std::string& yamlText) {
  YAML::Node root;
  try {
    root = YAML::Load(yamlText);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parseRoot(root);
}

PipelineConfig loadPipelineConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parsePipelineConfig(ss.str());
}

}  // namespace scanmap
