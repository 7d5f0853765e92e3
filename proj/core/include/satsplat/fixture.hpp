#pragma once

#include <cstdint>
#include <filesystem>

#include "satsplat/pipeline.hpp"
#include "satsplat/scripted_detector.hpp"
#include "satsplat/synthetic.hpp"

namespace satsplat {

// Synthetic end-to-end scene: a satellite splat model, an orbit of original
// cameras and scripted detections standing in for the external detector.
struct FixtureOptions {
  int splats = 500;
  int views = 12;
  double distance = 5.0;
  int image_size = 256;
  double aim_jitter = 0.1;
  std::uint64_t seed = 7;
  // Detector behaviour on the original views and on the rendered views.
  ScriptedDetectorConfig original;
  ScriptedDetectorConfig render;

  FixtureOptions();
};

struct FixtureFiles {
  std::filesystem::path root;
  std::filesystem::path splat_file;
  std::filesystem::path pose_file;
  std::filesystem::path original_dir;
  std::filesystem::path ground_truth_dir;
  std::filesystem::path render_dir;
  std::filesystem::path config_file;
};

SyntheticSatellite fixture_satellite(const FixtureOptions& options);
std::vector<CameraView> fixture_views(const FixtureOptions& options);

// Writes splats.ply, poses.json, detections/{original,ground_truth}/ and a
// config.json whose render detections point at detections/renders/ (left
// empty) and whose output goes to out/.
FixtureFiles write_fixture(const FixtureOptions& options, const std::filesystem::path& dir);

// Runs the scripted detector over every pose in pose_file and writes one
// <id>.txt per view into out_dir.
void write_scripted_detections(const SyntheticSatellite& target,
                               const std::filesystem::path& pose_file,
                               const ScriptedDetectorConfig& config,
                               const std::filesystem::path& out_dir);

}  // namespace satsplat
