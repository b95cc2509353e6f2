#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "scanmap/csf.hpp"
#include "scanmap/localization.hpp"
#include "scanmap/mapcraft.hpp"
#include "scanmap/simulation.hpp"
#include "scanmap/traversability.hpp"

namespace scanmap {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Aggregated parameters for every pipeline stage. Everything is optional in
/// the YAML file and falls back to the defaults below; unknown keys are
/// rejected with the offending field path.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads

  SceneSpec scene;
  LidarModel lidar;
  TrajectorySpec trajectory;

  UniformSamplingParams craftSampling;
  MlsParams craftMls;

  CsfParams ground;
  TraversabilityParams traverse;
  LocalizerConfig localizer;

  double evalOutlierThreshold = 0.5;  // meters
};

PipelineConfig loadPipelineConfig(const std::filesystem::path& path);

/// Parses YAML text (exposed so tests can exercise validation directly).
PipelineConfig parsePipelineConfig(const std::string& yamlText);

}  // namespace scanmap
