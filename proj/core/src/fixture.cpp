#include "satsplat/fixture.hpp"

#include <fstream>

#include "satsplat/errors.hpp"

namespace satsplat {

FixtureOptions::FixtureOptions() {
  original.misclass_rate = 0.2;
  original.box_jitter = 0.004;
  original.conf_lo = 0.6;
  original.conf_hi = 0.95;
  original.seed = 11;

  render.misclass_rate = 0.2;
  render.box_jitter = 0.004;
  render.bias = {0.03, -0.02};
  render.conf_lo = 0.6;
  render.conf_hi = 0.95;
  render.seed = 23;
}

SyntheticSatellite fixture_satellite(const FixtureOptions& options) {
  return make_synthetic_satellite(options.splats, options.seed);
}

std::vector<CameraView> fixture_views(const FixtureOptions& options) {
  const double s = options.image_size;
  const Intrinsics intr{s, s, s / 2.0, s / 2.0, options.image_size, options.image_size};
  return make_orbit_views(options.views, options.distance, intr, options.aim_jitter,
                          options.seed + 1);
}

void write_scripted_detections(const SyntheticSatellite& target,
                               const std::filesystem::path& pose_file,
                               const ScriptedDetectorConfig& config,
                               const std::filesystem::path& out_dir) {
  const auto views = load_pose_file(pose_file);
  for (const ViewDetections& v : scripted_detect_all(target, views, config)) {
    write_detection_file(out_dir / (v.view_id + ".txt"), v.detections);
  }
}

FixtureFiles write_fixture(const FixtureOptions& options, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  FixtureFiles files;
  files.root = dir;
  files.splat_file = dir / "splats.ply";
  files.pose_file = dir / "poses.json";
  files.original_dir = dir / "detections" / "original";
  files.ground_truth_dir = dir / "detections" / "ground_truth";
  files.render_dir = dir / "detections" / "renders";
  files.config_file = dir / "config.json";

  std::error_code ec;
  for (const fs::path& p : {files.original_dir, files.ground_truth_dir, files.render_dir}) {
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string(), p.string());
  }

  const SyntheticSatellite sat = fixture_satellite(options);
  const auto views = fixture_views(options);
  save_splat_ply(files.splat_file, sat.cloud);
  save_pose_file(files.pose_file, views);

  ScriptedDetectorConfig truth;
  for (const ViewDetections& v : scripted_detect_all(sat, views, truth)) {
    write_detection_file(files.ground_truth_dir / (v.view_id + ".txt"), v.detections);
  }
  for (const ViewDetections& v : scripted_detect_all(sat, views, options.original)) {
    write_detection_file(files.original_dir / (v.view_id + ".txt"), v.detections);
  }

  PipelineConfig cfg;
  cfg.splat_file = "splats.ply";
  cfg.pose_file = "poses.json";
  cfg.output_dir = "out";
  cfg.original_detections = "detections/original";
  cfg.render_detections = "detections/renders";
  cfg.ground_truth = "detections/ground_truth";
  cfg.cameras.mode = GenerationMode::kSphericalFibonacci;
  cfg.cameras.radius = 0.1;
  cfg.cameras.per_view = 16;
  cfg.render.tile_size = 16;
  std::ofstream out(files.config_file);
  out << cfg.to_json_text();
  if (!out) throw IoError("cannot write " + files.config_file.string(), files.config_file.string());
  return files;
}

}  // namespace satsplat
