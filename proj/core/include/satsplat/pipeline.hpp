#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satsplat/ensemble.hpp"
#include "satsplat/geometry.hpp"
#include "satsplat/metrics.hpp"
#include "satsplat/pose_io.hpp"
#include "satsplat/renderer.hpp"

namespace satsplat {

enum class GenerationMode {
  kCircularRandom,
  kCircularEquidistant,
  kSphericalRandom,
  kSphericalFibonacci,
};

const char* to_string(GenerationMode mode);
// Accepts "circular-random", "circular-equidistant", "spherical-random",
// "spherical-fibonacci"; ConfigError otherwise.
GenerationMode parse_generation_mode(const std::string& text);

struct CameraGeneration {
  GenerationMode mode = GenerationMode::kSphericalFibonacci;
  double radius = 0.5;
  int per_view = 64;
  std::uint64_t seed = 0;
};

struct GridRanges {
  std::vector<double> group_iou = {0.3, 0.5, 0.7};
  std::vector<int> min_group_size = {8, 16, 32};
  std::vector<double> purity_min = {0.5, 0.7, 0.9};
  std::vector<double> merge_iou = {0.3, 0.5};
  // Empty means the single configured fusion value.
  std::vector<double> anchor_conf_min;
  std::vector<double> match_iou;

  std::size_t cell_count() const;
};

struct PipelineConfig {
  std::filesystem::path splat_file;
  std::filesystem::path pose_file;
  std::filesystem::path output_dir = "satsplat_out";
  CameraGeneration cameras;
  RenderConfig render;
  std::filesystem::path original_detections;
  std::filesystem::path render_detections;
  std::filesystem::path ground_truth;
  EnsembleThresholds thresholds;
  FusionParams fusion;
  GridRanges grid;

  // Relative paths resolve against base_dir. Unknown keys are rejected.
  static PipelineConfig from_json_text(const std::string& text,
                                       const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
  std::string to_json_text() const;
  void validate() const;
};

// Generated views of one original camera.
struct CameraGroup {
  std::string source_id;
  std::vector<std::string> generated_ids;
};

struct CameraPlan {
  AttentionSolution attention;
  std::vector<CameraView> originals;
  std::vector<CameraView> generated;
  std::vector<CameraGroup> groups;
};

// Solves the attention center and generates gen.per_view poses per original
// view. View i uses seed mix_seed(gen.seed, i); generated ids are
// "<source>_g<j>" with j zero-padded to 3 digits. Intrinsics are copied from
// the source view.
CameraPlan plan_cameras(std::vector<CameraView> originals, const CameraGeneration& gen);

// Writes attention.json, generated_poses.json, camera_groups.json and
// cameras.csv into out_dir.
void write_camera_artifacts(const CameraPlan& plan, const std::filesystem::path& out_dir);
CameraPlan solve_and_report_cameras(const std::filesystem::path& pose_file,
                                    const CameraGeneration& gen,
                                    const std::filesystem::path& out_dir);

std::vector<CameraGroup> load_camera_groups(const std::filesystem::path& path);

// Detections gathered for ensembling: one original view per group, plus the
// render views generated from it, plus optional ground truth.
struct EnsembleDataset {
  std::vector<ViewDetections> originals;
  std::vector<std::vector<ViewDetections>> renders;  // parallel to originals
  std::vector<ViewDetections> ground_truth;
};

// Loads originals and ground truth for each group's source id and the
// render detections for its generated ids. Throws MissingDetections listing
// every generated id without a detection file.
EnsembleDataset load_ensemble_dataset(std::span<const CameraGroup> groups,
                                      const std::filesystem::path& original_dir,
                                      const std::filesystem::path& render_dir,
                                      const std::filesystem::path& ground_truth_dir);

std::vector<EnsembleResult> ensemble_dataset(const EnsembleDataset& data,
                                             const EnsembleThresholds& t,
                                             const FusionParams& params, int threads = 0);

struct GridCell {
  EnsembleThresholds thresholds;
  FusionParams fusion;
  double map50 = 0.0;
  double map50_95 = 0.0;
};

struct GridSearchResult {
  EnsembleThresholds best;
  FusionParams best_fusion;
  double best_map50 = 0.0;
  std::vector<GridCell> table;  // enumeration order

  std::string table_csv() const;
};

// Runs ensemble + evaluate for every cell of the grid (parallel over cells)
// and picks the highest mAP@0.5, ties going to higher purity_min, then lower
// min_group_size, then enumeration order.
GridSearchResult grid_search(const GridRanges& grid, const FusionParams& params,
                             const EnsembleDataset& data, int threads = 0);

struct PipelineOutcome {
  EvalReport original;
  EvalReport corrected;
  std::vector<std::string> skipped_stages;  // up to date per the run ledger
  std::filesystem::path report_file;
};

// Stages: cameras, render, ingest, ensemble, eval. Each stage's inputs and
// outputs are fingerprinted in <output_dir>/run_ledger.json; a stage whose
// recorded inputs and outputs still match is skipped, and artifacts read
// from an earlier stage must match the fingerprints that stage recorded.
// Throws MissingDetections after rendering when render detections are absent.
PipelineOutcome run_pipeline(const PipelineConfig& config);

inline constexpr const char* kRunLedgerName = "run_ledger.json";

}  // namespace satsplat
