// satsplat command-line tool.
//
// Every subcommand accepts --config <file> plus flags mirroring the config
// keys; flags given on the command line override the file.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "satsplat/errors.hpp"
#include "satsplat/fixture.hpp"
#include "satsplat/image.hpp"
#include "satsplat/metrics.hpp"
#include "satsplat/pipeline.hpp"
#include "satsplat/renderer.hpp"
#include "satsplat/splat_model.hpp"

namespace fs = std::filesystem;
using namespace satsplat;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> splat_file, pose_file, output_dir;
  std::optional<std::string> mode;
  std::optional<double> radius;
  std::optional<int> per_view;
  std::optional<std::uint64_t> seed;
  std::vector<double> background;
  std::optional<double> near, termination;
  std::optional<int> tile_size, threads;
  std::optional<std::string> original, renders, ground_truth;
  std::optional<double> group_iou, purity_min, merge_iou, anchor_conf_min, match_iou;
  std::optional<int> min_group_size;
  std::vector<double> grid_group_iou, grid_purity_min, grid_merge_iou, grid_anchor_conf_min,
      grid_match_iou;
  std::vector<int> grid_min_group_size;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON pipeline config");
  cmd->add_option("--splat-file", o.splat_file, "Gaussian splat PLY");
  cmd->add_option("--pose-file", o.pose_file, "camera pose JSON");
  cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
  cmd->add_option("--mode", o.mode,
                  "camera generation: circular-random, circular-equidistant, "
                  "spherical-random, spherical-fibonacci");
  cmd->add_option("--radius", o.radius, "generation radius");
  cmd->add_option("--per-view", o.per_view, "generated poses per original view");
  cmd->add_option("--seed", o.seed, "generation seed");
  cmd->add_option("--background", o.background, "render background R G B")->expected(3);
  cmd->add_option("--near", o.near, "near clip distance");
  cmd->add_option("--termination", o.termination, "transmittance cut-off");
  cmd->add_option("--tile-size", o.tile_size, "raster tile size");
  cmd->add_option("--threads", o.threads, "worker threads (0 = default)");
  cmd->add_option("--original", o.original, "original detections directory");
  cmd->add_option("--renders", o.renders, "render detections directory");
  cmd->add_option("--ground-truth", o.ground_truth, "ground-truth detections directory");
  cmd->add_option("--group-iou", o.group_iou);
  cmd->add_option("--min-group-size", o.min_group_size);
  cmd->add_option("--purity-min", o.purity_min);
  cmd->add_option("--merge-iou", o.merge_iou);
  cmd->add_option("--anchor-conf-min", o.anchor_conf_min);
  cmd->add_option("--match-iou", o.match_iou);
  cmd->add_option("--grid-group-iou", o.grid_group_iou);
  cmd->add_option("--grid-min-group-size", o.grid_min_group_size);
  cmd->add_option("--grid-purity-min", o.grid_purity_min);
  cmd->add_option("--grid-merge-iou", o.grid_merge_iou);
  cmd->add_option("--grid-anchor-conf-min", o.grid_anchor_conf_min);
  cmd->add_option("--grid-match-iou", o.grid_match_iou);
}

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);
  if (o.splat_file) cfg.splat_file = *o.splat_file;
  if (o.pose_file) cfg.pose_file = *o.pose_file;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.mode) cfg.cameras.mode = parse_generation_mode(*o.mode);
  if (o.radius) cfg.cameras.radius = *o.radius;
  if (o.per_view) cfg.cameras.per_view = *o.per_view;
  if (o.seed) cfg.cameras.seed = *o.seed;
  if (o.background.size() == 3) cfg.render.background = Vec3(o.background[0], o.background[1], o.background[2]);
  if (o.near) cfg.render.near = *o.near;
  if (o.termination) cfg.render.termination = *o.termination;
  if (o.tile_size) cfg.render.tile_size = *o.tile_size;
  if (o.threads) cfg.render.threads = *o.threads;
  if (o.original) cfg.original_detections = *o.original;
  if (o.renders) cfg.render_detections = *o.renders;
  if (o.ground_truth) cfg.ground_truth = *o.ground_truth;
  if (o.group_iou) cfg.thresholds.group_iou = *o.group_iou;
  if (o.min_group_size) cfg.thresholds.min_group_size = *o.min_group_size;
  if (o.purity_min) cfg.thresholds.purity_min = *o.purity_min;
  if (o.merge_iou) cfg.thresholds.merge_iou = *o.merge_iou;
  if (o.anchor_conf_min) cfg.fusion.anchor_conf_min = *o.anchor_conf_min;
  if (o.match_iou) cfg.fusion.match_iou = *o.match_iou;
  if (!o.grid_group_iou.empty()) cfg.grid.group_iou = o.grid_group_iou;
  if (!o.grid_min_group_size.empty()) cfg.grid.min_group_size = o.grid_min_group_size;
  if (!o.grid_purity_min.empty()) cfg.grid.purity_min = o.grid_purity_min;
  if (!o.grid_merge_iou.empty()) cfg.grid.merge_iou = o.grid_merge_iou;
  if (!o.grid_anchor_conf_min.empty()) cfg.grid.anchor_conf_min = o.grid_anchor_conf_min;
  if (!o.grid_match_iou.empty()) cfg.grid.match_iou = o.grid_match_iou;
  cfg.validate();
  return cfg;
}

void require(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("missing ") + what);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string(), path.string());
}

std::vector<ViewDetections> load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string(), dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return load_view_detections(dir, ids);
}

fs::path groups_file(const PipelineConfig& cfg, const std::string& flag) {
  return flag.empty() ? cfg.output_dir / "cameras" / "camera_groups.json" : fs::path(flag);
}

void print_report(const char* label, const EvalReport& r) {
  std::printf("%-10s mAP@0.5 %.4f  mAP@0.5:0.95 %.4f  P %.4f  R %.4f\n", label, r.map50,
              r.map50_95, r.operating_point.precision, r.operating_point.recall);
}

int cmd_cameras(const Overrides& o) {
  const PipelineConfig cfg = resolve_config(o);
  require(cfg.pose_file, "pose_file");
  const fs::path out = cfg.output_dir / "cameras";
  const CameraPlan plan = solve_and_report_cameras(cfg.pose_file, cfg.cameras, out);
  const Vec3& c = plan.attention.center;
  std::printf("attention center (%.6f, %.6f, %.6f)  residual %.3g\n", c.x(), c.y(), c.z(),
              plan.attention.residual_rms);
  std::printf("%zu generated poses -> %s\n", plan.generated.size(),
              (out / "generated_poses.json").string().c_str());
  return 0;
}

int cmd_render(const Overrides& o, const std::string& views_flag) {
  const PipelineConfig cfg = resolve_config(o);
  require(cfg.splat_file, "splat_file");
  const fs::path views_path =
      views_flag.empty() ? cfg.output_dir / "cameras" / "generated_poses.json" : fs::path(views_flag);
  const auto views = load_pose_file(views_path);
  const SplatCloud cloud = load_splat_ply(cfg.splat_file);
  const fs::path out = cfg.output_dir / "renders";
  const auto rendered = render_batch(cloud, views, cfg.render, out);
  std::printf("rendered %zu views -> %s\n", rendered.size(), out.string().c_str());
  return 0;
}

int cmd_ensemble(const Overrides& o, const std::string& groups_flag) {
  const PipelineConfig cfg = resolve_config(o);
  require(cfg.original_detections, "original detections");
  require(cfg.render_detections, "render detections");
  const auto groups = load_camera_groups(groups_file(cfg, groups_flag));
  const EnsembleDataset data =
      load_ensemble_dataset(groups, cfg.original_detections, cfg.render_detections, {});
  const fs::path out = cfg.output_dir / "ensemble";
  for (const EnsembleResult& r :
       ensemble_dataset(data, cfg.thresholds, cfg.fusion, cfg.render.threads)) {
    write_detection_file(out / (r.corrected.view_id + ".txt"), r.corrected.detections);
    write_file(out / (r.corrected.view_id + ".json"),
               ensemble_sidecar_json(r, cfg.thresholds, cfg.fusion));
  }
  std::printf("ensembled %zu views -> %s\n", groups.size(), out.string().c_str());
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& pred_flag, const std::string& report_flag) {
  const PipelineConfig cfg = resolve_config(o);
  require(cfg.ground_truth, "ground truth");
  const fs::path pred_dir = pred_flag.empty() ? cfg.output_dir / "ensemble" : fs::path(pred_flag);
  const auto gt = load_dir(cfg.ground_truth);
  const auto pred = load_dir(pred_dir);
  const EvalReport report = evaluate(pred, gt);
  if (report_flag.empty()) {
    std::cout << report.to_json() << "\n";
  } else {
    write_file(report_flag, report.to_json() + "\n");
  }
  print_report("eval", report);
  return 0;
}

int cmd_gridsearch(const Overrides& o, const std::string& groups_flag) {
  const PipelineConfig cfg = resolve_config(o);
  require(cfg.original_detections, "original detections");
  require(cfg.render_detections, "render detections");
  require(cfg.ground_truth, "ground truth");
  const auto groups = load_camera_groups(groups_file(cfg, groups_flag));
  const EnsembleDataset data = load_ensemble_dataset(groups, cfg.original_detections,
                                                     cfg.render_detections, cfg.ground_truth);
  const GridSearchResult result = grid_search(cfg.grid, cfg.fusion, data, cfg.render.threads);
  const fs::path out = cfg.output_dir / "gridsearch";
  write_file(out / "table.csv", result.table_csv());
  const nlohmann::json best = {{"group_iou", result.best.group_iou},
                               {"min_group_size", result.best.min_group_size},
                               {"purity_min", result.best.purity_min},
                               {"merge_iou", result.best.merge_iou},
                               {"anchor_conf_min", result.best_fusion.anchor_conf_min},
                               {"match_iou", result.best_fusion.match_iou},
                               {"map50", result.best_map50}};
  write_file(out / "best.json", best.dump(1) + "\n");
  std::printf("%zu cells; best mAP@0.5 %.4f at group_iou %g min_group_size %d purity_min %g "
              "merge_iou %g anchor_conf_min %g match_iou %g\n",
              result.table.size(), result.best_map50, result.best.group_iou,
              result.best.min_group_size, result.best.purity_min, result.best.merge_iou,
              result.best_fusion.anchor_conf_min, result.best_fusion.match_iou);
  return 0;
}

int cmd_run(const Overrides& o) {
  const PipelineConfig cfg = resolve_config(o);
  const PipelineOutcome outcome = run_pipeline(cfg);
  for (const std::string& s : outcome.skipped_stages) std::printf("stage %s up to date\n", s.c_str());
  print_report("original", outcome.original);
  print_report("corrected", outcome.corrected);
  std::printf("report -> %s\n", outcome.report_file.string().c_str());
  return 0;
}

int cmd_metrics_image(const std::string& a, const std::string& b) {
  const Image ia = read_png(a);
  const Image ib = read_png(b);
  std::printf("SSIM %.6f\nPSNR %.4f dB\n", ssim(ia, ib), psnr(ia, ib));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-splat novel views and detection ensembling"};
  app.require_subcommand(1);

  Overrides o;
  std::string views_flag, groups_flag, pred_flag, report_flag, img_a, img_b;

  auto* cameras = app.add_subcommand("cameras", "solve the attention center and generate poses");
  add_config_flags(cameras, o);

  auto* render = app.add_subcommand("render", "render a pose file through the splat model");
  add_config_flags(render, o);
  render->add_option("--views", views_flag, "poses to render (default: generated poses)");

  auto* ensemble = app.add_subcommand("ensemble", "fuse render detections into each original view");
  add_config_flags(ensemble, o);
  ensemble->add_option("--groups", groups_flag, "camera_groups.json");

  auto* eval = app.add_subcommand("eval", "score a detection directory against ground truth");
  add_config_flags(eval, o);
  eval->add_option("--pred", pred_flag, "prediction directory (default: <output>/ensemble)");
  eval->add_option("--report", report_flag, "write the JSON report here instead of stdout");

  auto* grid = app.add_subcommand("gridsearch", "grid search the ensemble thresholds");
  add_config_flags(grid, o);
  grid->add_option("--groups", groups_flag, "camera_groups.json");

  auto* run = app.add_subcommand("run", "run every stage");
  add_config_flags(run, o);

  auto* metrics = app.add_subcommand("metrics-image", "SSIM and PSNR between two PNG images");
  metrics->add_option("a", img_a)->required();
  metrics->add_option("b", img_b)->required();

  FixtureOptions fx;
  std::string fixture_dir;
  auto* synth = app.add_subcommand("synth", "write a synthetic satellite scene and config");
  synth->add_option("dir", fixture_dir)->required();
  synth->add_option("--splats", fx.splats);
  synth->add_option("--views", fx.views);
  synth->add_option("--seed", fx.seed);

  std::string stub_poses, stub_out;
  double stub_misclass = fx.render.misclass_rate, stub_dx = fx.render.bias.dx,
         stub_dy = fx.render.bias.dy;
  auto* stub = app.add_subcommand("detect-stub",
                                  "scripted detector over a pose file (synthetic scenes only)");
  stub->add_option("--poses", stub_poses)->required();
  stub->add_option("--out", stub_out)->required();
  stub->add_option("--splats", fx.splats);
  stub->add_option("--seed", fx.seed, "scene seed given to synth");
  stub->add_option("--misclass", stub_misclass);
  stub->add_option("--bias-x", stub_dx);
  stub->add_option("--bias-y", stub_dy);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*cameras) return cmd_cameras(o);
    if (*render) return cmd_render(o, views_flag);
    if (*ensemble) return cmd_ensemble(o, groups_flag);
    if (*eval) return cmd_eval(o, pred_flag, report_flag);
    if (*grid) return cmd_gridsearch(o, groups_flag);
    if (*run) return cmd_run(o);
    if (*metrics) return cmd_metrics_image(img_a, img_b);
    if (*synth) {
      const FixtureFiles files = write_fixture(fx, fixture_dir);
      std::printf("scene written; run: satsplat run --config %s\n", files.config_file.string().c_str());
      return 0;
    }
    if (*stub) {
      fx.render.misclass_rate = stub_misclass;
      fx.render.bias = {stub_dx, stub_dy};
      write_scripted_detections(fixture_satellite(fx), stub_poses, fx.render, stub_out);
      return 0;
    }
  } catch (const Error& e) {
    if (e.stage().empty()) {
      std::fprintf(stderr, "error: %s\n", e.what());
    } else {
      std::fprintf(stderr, "error [%s] %s\n", e.stage().c_str(), e.what());
    }
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
