// Command-line front end for the scanmap pipeline:
//   simulate -> craft -> ground -> traverse -> init-pose / localize -> eval
//
// Exit codes: 0 success, 1 runtime failure, 2 missing input file,
//             3 invalid config, 4 pose initialization failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "scanmap/cloud_io.hpp"
#include "scanmap/csf.hpp"
#include "scanmap/evaluation.hpp"
#include "scanmap/localization.hpp"
#include "scanmap/mapcraft.hpp"
#include "scanmap/parallel.hpp"
#include "scanmap/pipeline_config.hpp"
#include "scanmap/simulation.hpp"
#include "scanmap/traversability.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitBadConfig = 3;
constexpr int kExitInitFailed = 4;

struct MissingFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InitFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_verbose = false;

void note(const std::string& message) {
  if (g_verbose) std::cerr << "[scanmap] " << message << "\n";
}

void requireFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFileError("no such file or directory: " + path.string());
  }
}

scanmap::PointCloud loadCloudChecked(const std::filesystem::path& path) {
  requireFile(path);
  return scanmap::loadCloud(path);
}

scanmap::RigidTransform parseGuess(const std::string& text) {
  // "x,y,z,yaw_deg" or "x,y,z,qx,qy,qz,qw"
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  scanmap::RigidTransform t;
  if (v.size() == 4) {
    t.translation = scanmap::Vec3(v[0], v[1], v[2]);
    t.rotation = scanmap::so3Exp(scanmap::Vec3(0, 0, v[3] * 3.14159265358979 / 180.0));
  } else if (v.size() == 7) {
    t.translation = scanmap::Vec3(v[0], v[1], v[2]);
    Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
    q.normalize();
    t.rotation = q.toRotationMatrix();
  } else {
    throw scanmap::ConfigError("config: --guess expects x,y,z,yaw_deg or x,y,z,qx,qy,qz,qw");
  }
  return t;
}

void writeRunMetadata(const std::filesystem::path& path, const scanmap::PipelineConfig& cfg,
                      const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int runSimulate(const scanmap::PipelineConfig& cfg, const std::string& outDir) {
  scanmap::Scene scene = scanmap::buildScene(cfg.scene);
  scanmap::LidarModel lidar = cfg.lidar;
  lidar.seed = cfg.seed;
  scanmap::ScanSequence sequence = scanmap::generateSequence(scene, cfg.trajectory, lidar);
  scanmap::saveSequence(sequence, outDir, &scene.referenceGround, &scene.referenceNonground);
  writeRunMetadata(std::filesystem::path(outDir) / "metadata.json", cfg, "simulate");
  std::cout << "scans: " << sequence.scans.size()
            << "\nreference points: " << sequence.sceneReference.size() << "\nout: " << outDir
            << "\n";
  return 0;
}

int runCraft(const scanmap::PipelineConfig& cfg, const std::string& in, const std::string& out) {
  scanmap::PointCloud cloud = loadCloudChecked(in);
  scanmap::PointCloud crafted = scanmap::craftMap(cloud, cfg.craftSampling, cfg.craftMls);
  scanmap::saveCloud(crafted, out, scanmap::formatFromExtension(out));
  std::cout << "points: " << cloud.size() << " -> " << crafted.size() << "\nout: " << out << "\n";
  return 0;
}

int runGround(const scanmap::PipelineConfig& cfg, const std::string& in,
              const std::string& outGround, const std::string& outNonground) {
  scanmap::PointCloud cloud = loadCloudChecked(in);
  scanmap::CsfResult result = scanmap::csfExtract(cloud, cfg.ground);
  scanmap::saveCloud(result.ground, outGround, scanmap::formatFromExtension(outGround));
  scanmap::saveCloud(result.nonground, outNonground, scanmap::formatFromExtension(outNonground));
  std::cout << "ground: " << result.ground.size() << "\nnonground: " << result.nonground.size()
            << "\niterations: " << result.iterationsUsed << "\n";
  return 0;
}

int runTraverse(const scanmap::PipelineConfig& cfg, const std::string& in,
                const std::string& outPrefix) {
  scanmap::PointCloud ground = loadCloudChecked(in);
  scanmap::ElevationGrid grid = scanmap::rasterizeElevation(ground, cfg.traverse);
  scanmap::surfaceNormalsLayer(grid, cfg.traverse);
  scanmap::slopeLayer(grid);
  scanmap::roughnessLayer(grid, cfg.traverse);
  scanmap::traversabilityLayer(grid, cfg.traverse);
  scanmap::exportCostmap(grid, outPrefix, cfg.traverse);
  scanmap::dumpLayersCsv(grid, outPrefix);
  std::cout << "grid: " << grid.width << "x" << grid.height << " cells of " << grid.cellSize
            << " m\nout: " << outPrefix << ".pgm/.yaml + layer CSVs\n";
  return 0;
}

int runInitPose(const scanmap::PipelineConfig& cfg, const std::string& scansDir,
                const std::string& mapPath, const std::string& guessText) {
  requireFile(scansDir);
  scanmap::ScanSequence sequence = scanmap::loadSequence(scansDir);
  scanmap::PointCloud mapCloud = loadCloudChecked(mapPath);
  scanmap::KdTree map(mapCloud.points);
  scanmap::InitializationResult result =
      scanmap::initializePose(sequence.scans, map, parseGuess(guessText), cfg.localizer);
  std::printf("fitness: %.9g\niterations: %d\n", result.fitness, result.iterationsUsed);
  if (!result.success) {
    throw InitFailedError("pose initialization failed: fitness=" + std::to_string(result.fitness));
  }
  Eigen::Quaterniond q(result.pose.rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  std::printf("pose: %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", result.pose.translation.x(),
              result.pose.translation.y(), result.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
  return 0;
}

int runLocalize(const scanmap::PipelineConfig& cfg, const std::string& mapPath,
                const std::string& sequenceDir, const std::string& guessText,
                const std::string& outDir) {
  requireFile(sequenceDir);
  scanmap::PointCloud mapCloud = loadCloudChecked(mapPath);
  scanmap::ScanSequence sequence = scanmap::loadSequence(sequenceDir);

  scanmap::SequenceRunResult result;
  try {
    result = scanmap::runSequence(mapCloud, sequence, parseGuess(guessText), cfg.localizer);
  } catch (const std::runtime_error& e) {
    throw InitFailedError(e.what());
  }

  std::filesystem::create_directories(outDir);
  std::filesystem::path dir(outDir);
  scanmap::writeTrajectoryTum(result.trajectory, dir / "trajectory.tum");
  scanmap::saveCloud(result.registeredCloud, dir / "registered.ply", scanmap::CloudFormat::PLY);
  scanmap::saveCloud(result.updatedMapCloud, dir / "updated_map.ply", scanmap::CloudFormat::PLY);
  writeRunMetadata(dir / "metadata.json", cfg, "localize");
  std::cout << "poses: " << result.trajectory.size() << "\ndegraded: " << result.degradedCount
            << "\ninserted points: " << result.insertedPoints
            << "\ninit fitness: " << result.init.fitness << "\nout: " << outDir << "\n";
  return 0;
}

int runEval(const scanmap::PipelineConfig& cfg, const std::string& mapPath,
            const std::string& registeredPath, const std::string& trajectoryPath,
            const std::string& truthPath, const std::string& outJson) {
  scanmap::PointCloud mapCloud = loadCloudChecked(mapPath);
  scanmap::PointCloud registered = loadCloudChecked(registeredPath);
  requireFile(trajectoryPath);
  requireFile(truthPath);
  auto trajectory = scanmap::readTrajectoryTum(trajectoryPath);
  auto truth = scanmap::readTrajectoryTum(truthPath);
  scanmap::RunEvaluation eval =
      scanmap::evaluateRun(mapCloud, registered, trajectory, truth, cfg.evalOutlierThreshold);
  std::cout << scanmap::formatReport(eval);
  if (!outJson.empty()) scanmap::writeReportJson(eval, outJson);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud mapping, ground extraction, traversability and "
               "prior-map localization pipeline"};
  app.require_subcommand(1);

  std::string configPath;
  std::uint64_t seedOverride = 0;
  bool seedSet = false;
  int threads = 0;
  app.add_option("--config", configPath, "YAML pipeline configuration")->envname("SCANMAP_CONFIG");
  app.add_option("--seed", seedOverride, "RNG seed override")->each([&](const std::string&) {
    seedSet = true;
  });
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
  app.add_flag("--verbose", g_verbose, "progress notes on stderr");

  std::string outDir, inPath, outPath, outGround, outNonground, outPrefix;
  std::string mapPath, scansDir, guessText = "0,0,0,0", sequenceDir, registeredPath;
  std::string trajectoryPath, truthPath, outJson;

  CLI::App* simulate = app.add_subcommand("simulate", "raycast a scan sequence from a scene spec");
  simulate->add_option("--out", outDir, "output directory")->required();

  CLI::App* craft = app.add_subcommand("craft", "uniform sampling + MLS smoothing");
  craft->add_option("--in", inPath, "input cloud (.ply/.pcd)")->required();
  craft->add_option("--out", outPath, "output cloud")->required();

  CLI::App* ground = app.add_subcommand("ground", "cloth-simulation ground extraction");
  ground->add_option("--in", inPath, "input cloud")->required();
  ground->add_option("--out-ground", outGround, "ground output cloud")->required();
  ground->add_option("--out-nonground", outNonground, "non-ground output cloud")->required();

  CLI::App* traverse = app.add_subcommand("traverse", "elevation grid filters + costmap export");
  traverse->add_option("--in", inPath, "ground cloud")->required();
  traverse->add_option("--out-prefix", outPrefix, "output path prefix")->required();

  CLI::App* initPose = app.add_subcommand("init-pose", "ICP pose initialization on a prior map");
  initPose->add_option("--scans", scansDir, "scan sequence directory")->required();
  initPose->add_option("--map", mapPath, "prior map cloud")->required();
  initPose->add_option("--guess", guessText, "initial guess x,y,z,yaw_deg or x,y,z,qx,qy,qz,qw");

  CLI::App* localize = app.add_subcommand("localize", "hybrid scan-to-map localization");
  localize->add_option("--map", mapPath, "prior map cloud")->required();
  localize->add_option("--sequence", sequenceDir, "scan sequence directory")->required();
  localize->add_option("--guess", guessText, "initial guess");
  localize->add_option("--out", outDir, "output directory")->required();

  CLI::App* evalCmd = app.add_subcommand("eval", "cloud-to-cloud + trajectory evaluation");
  evalCmd->add_option("--map", mapPath, "prior map cloud")->required();
  evalCmd->add_option("--registered", registeredPath, "registered cloud from localize")->required();
  evalCmd->add_option("--trajectory", trajectoryPath, "estimated trajectory (TUM)")->required();
  evalCmd->add_option("--truth", truthPath, "ground-truth trajectory (TUM)")->required();
  evalCmd->add_option("--out-json", outJson, "machine-readable report path");

  CLI11_PARSE(app, argc, argv);

  try {
    scanmap::PipelineConfig cfg;
    if (!configPath.empty()) {
      requireFile(configPath);
      cfg = scanmap::loadPipelineConfig(configPath);
    }
    if (seedSet) cfg.seed = seedOverride;
    if (threads > 0) cfg.threads = threads;
    scanmap::setMaxThreads(cfg.threads);
    note("threads=" + std::to_string(scanmap::maxThreads()) + " seed=" + std::to_string(cfg.seed));

    if (simulate->parsed()) return runSimulate(cfg, outDir);
    if (craft->parsed()) return runCraft(cfg, inPath, outPath);
    if (ground->parsed()) return runGround(cfg, inPath, outGround, outNonground);
    if (traverse->parsed()) return runTraverse(cfg, inPath, outPrefix);
    if (initPose->parsed()) return runInitPose(cfg, scansDir, mapPath, guessText);
    if (localize->parsed()) return runLocalize(cfg, mapPath, sequenceDir, guessText, outDir);
    if (evalCmd->parsed()) return runEval(cfg, mapPath, registeredPath, trajectoryPath, truthPath, outJson);
    std::cerr << "error: runtime: no subcommand\n";
    return kExitRuntime;
  } catch (const MissingFileError& e) {
    std::cerr << "error: missing-file: " << e.what() << "\n";
    return kExitMissingFile;
  } catch (const scanmap::ConfigError& e) {
    std::cerr << "error: invalid-config: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const InitFailedError& e) {
    std::cerr << "error: init-failed: " << e.what() << "\n";
    return kExitInitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return kExitRuntime;
  }
}
