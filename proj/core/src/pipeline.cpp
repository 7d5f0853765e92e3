#include "satsplat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "satsplat/errors.hpp"
#include "satsplat/hashing.hpp"
#include "satsplat/parallel.hpp"
#include "satsplat/random.hpp"
#include "satsplat/splat_model.hpp"

namespace satsplat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string(), path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string(), path.string());
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p = value;
  return p.is_relative() ? base / p : p;
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json thresholds_json(const EnsembleThresholds& t, const FusionParams& p) {
  return {{"group_iou", t.group_iou},           {"min_group_size", t.min_group_size},
          {"purity_min", t.purity_min},         {"merge_iou", t.merge_iou},
          {"anchor_conf_min", p.anchor_conf_min}, {"match_iou", p.match_iou}};
}

json render_json(const RenderConfig& r) {
  return {{"background", {r.background.x(), r.background.y(), r.background.z()}},
          {"near", r.near},
          {"termination", r.termination},
          {"tile_size", r.tile_size}};
}

json cameras_json(const CameraGeneration& c) {
  return {{"mode", to_string(c.mode)},
          {"radius", c.radius},
          {"per_view", c.per_view},
          {"seed", c.seed}};
}

// Fingerprint of a set of per-view detection files (absent files included).
std::string detections_digest(const fs::path& dir, std::span<const std::string> ids) {
  std::uint64_t state = fnv1a64(dir.string());
  for (const std::string& id : ids) {
    const fs::path file = dir / (id + ".txt");
    state = fnv1a64(id, state);
    state = fnv1a64(fs::exists(file) ? hash_file(file) : std::string("absent"), state);
  }
  return to_hex(state);
}

using Fingerprints = std::map<std::string, std::string>;

// Per-stage record of input and output fingerprints, persisted as JSON.
class RunLedger {
 public:
  explicit RunLedger(fs::path output_dir)
      : root_(std::move(output_dir)), file_(root_ / kRunLedgerName) {
    if (fs::exists(file_)) {
      try {
        doc_ = json::parse(read_text(file_));
      } catch (const json::exception&) {
        doc_ = json::object();
      }
    }
    if (!doc_.is_object()) doc_ = json::object();
  }

  Fingerprints output_fingerprints(const std::vector<std::string>& relative) const {
    Fingerprints out;
    for (const std::string& rel : relative) out[rel] = hash_file(root_ / rel);
    return out;
  }

  bool up_to_date(const std::string& stage, const Fingerprints& inputs) const {
    if (!doc_.contains(stage)) return false;
    const json& entry = doc_.at(stage);
    if (entry.value("inputs", json::object()) != json(inputs)) return false;
    const json outputs = entry.value("outputs", json::object());
    for (const auto& [rel, digest] : outputs.items()) {
      const fs::path p = root_ / rel;
      if (!fs::exists(p) || hash_file(p) != digest.get<std::string>()) return false;
    }
    return true;
  }

  void record(const std::string& stage, const Fingerprints& inputs,
              const Fingerprints& outputs) {
    doc_[stage] = {{"inputs", inputs}, {"outputs", outputs}};
    write_text(file_, doc_.dump(1) + "\n");
  }

  // Hash of an artifact produced by an earlier stage, checked against what
  // that stage recorded.
  std::string verified(const std::string& producer, const std::string& rel) const {
    const std::string actual = hash_file(root_ / rel);
    const json* recorded = nullptr;
    if (doc_.contains(producer) && doc_.at(producer).contains("outputs") &&
        doc_.at(producer).at("outputs").contains(rel)) {
      recorded = &doc_.at(producer).at("outputs").at(rel);
    }
    if (!recorded || recorded->get<std::string>() != actual) {
      throw ConfigError("artifact " + rel + " does not match the fingerprint recorded by stage '" +
                        producer + "'; rerun that stage");
    }
    return actual;
  }

 private:
  fs::path root_;
  fs::path file_;
  json doc_ = json::object();
};

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

}  // namespace

const char* to_string(GenerationMode mode) {
  switch (mode) {
    case GenerationMode::kCircularRandom: return "circular-random";
    case GenerationMode::kCircularEquidistant: return "circular-equidistant";
    case GenerationMode::kSphericalRandom: return "spherical-random";
    case GenerationMode::kSphericalFibonacci: return "spherical-fibonacci";
  }
  return "unknown";
}

GenerationMode parse_generation_mode(const std::string& text) {
  for (GenerationMode m : {GenerationMode::kCircularRandom, GenerationMode::kCircularEquidistant,
                           GenerationMode::kSphericalRandom, GenerationMode::kSphericalFibonacci}) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown camera generation mode '" + text +
                    "' (expected circular-random, circular-equidistant, spherical-random or "
                    "spherical-fibonacci)");
}

std::size_t GridRanges::cell_count() const {
  return group_iou.size() * min_group_size.size() * purity_min.size() * merge_iou.size() *
         std::max<std::size_t>(1, anchor_conf_min.size()) *
         std::max<std::size_t>(1, match_iou.size());
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(doc,
                      {"splat_file", "pose_file", "output_dir", "cameras", "render", "detections",
                       "ensemble", "grid"},
                      "config");
  PipelineConfig cfg;
  std::string s;
  if (doc.contains("splat_file")) {
    read_opt(doc, "splat_file", s, "config");
    cfg.splat_file = resolve(base_dir, s);
  }
  if (doc.contains("pose_file")) {
    read_opt(doc, "pose_file", s, "config");
    cfg.pose_file = resolve(base_dir, s);
  }
  if (doc.contains("output_dir")) {
    read_opt(doc, "output_dir", s, "config");
    cfg.output_dir = resolve(base_dir, s);
  }
  if (doc.contains("cameras")) {
    const json& c = doc.at("cameras");
    reject_unknown_keys(c, {"mode", "radius", "per_view", "seed"}, "cameras");
    if (c.contains("mode")) {
      read_opt(c, "mode", s, "cameras");
      cfg.cameras.mode = parse_generation_mode(s);
    }
    read_opt(c, "radius", cfg.cameras.radius, "cameras");
    read_opt(c, "per_view", cfg.cameras.per_view, "cameras");
    read_opt(c, "seed", cfg.cameras.seed, "cameras");
  }
  if (doc.contains("render")) {
    const json& r = doc.at("render");
    reject_unknown_keys(r, {"background", "near", "termination", "tile_size", "threads"},
                        "render");
    if (r.contains("background")) {
      std::vector<double> bg;
      read_opt(r, "background", bg, "render");
      if (bg.size() != 3) throw ConfigError("render.background must hold 3 numbers");
      cfg.render.background = Vec3(bg[0], bg[1], bg[2]);
    }
    read_opt(r, "near", cfg.render.near, "render");
    read_opt(r, "termination", cfg.render.termination, "render");
    read_opt(r, "tile_size", cfg.render.tile_size, "render");
    read_opt(r, "threads", cfg.render.threads, "render");
  }
  if (doc.contains("detections")) {
    const json& d = doc.at("detections");
    reject_unknown_keys(d, {"original", "renders", "ground_truth"}, "detections");
    if (d.contains("original")) {
      read_opt(d, "original", s, "detections");
      cfg.original_detections = resolve(base_dir, s);
    }
    if (d.contains("renders")) {
      read_opt(d, "renders", s, "detections");
      cfg.render_detections = resolve(base_dir, s);
    }
    if (d.contains("ground_truth")) {
      read_opt(d, "ground_truth", s, "detections");
      cfg.ground_truth = resolve(base_dir, s);
    }
  }
  if (doc.contains("ensemble")) {
    const json& e = doc.at("ensemble");
    reject_unknown_keys(e,
                        {"group_iou", "min_group_size", "purity_min", "merge_iou",
                         "anchor_conf_min", "match_iou"},
                        "ensemble");
    read_opt(e, "group_iou", cfg.thresholds.group_iou, "ensemble");
    read_opt(e, "min_group_size", cfg.thresholds.min_group_size, "ensemble");
    read_opt(e, "purity_min", cfg.thresholds.purity_min, "ensemble");
    read_opt(e, "merge_iou", cfg.thresholds.merge_iou, "ensemble");
    read_opt(e, "anchor_conf_min", cfg.fusion.anchor_conf_min, "ensemble");
    read_opt(e, "match_iou", cfg.fusion.match_iou, "ensemble");
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    reject_unknown_keys(g,
                        {"group_iou", "min_group_size", "purity_min", "merge_iou",
                         "anchor_conf_min", "match_iou"},
                        "grid");
    read_opt(g, "group_iou", cfg.grid.group_iou, "grid");
    read_opt(g, "min_group_size", cfg.grid.min_group_size, "grid");
    read_opt(g, "purity_min", cfg.grid.purity_min, "grid");
    read_opt(g, "merge_iou", cfg.grid.merge_iou, "grid");
    read_opt(g, "anchor_conf_min", cfg.grid.anchor_conf_min, "grid");
    read_opt(g, "match_iou", cfg.grid.match_iou, "grid");
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return from_json_text(read_text(path), path.parent_path());
}

std::string PipelineConfig::to_json_text() const {
  json r = render_json(render);
  r["threads"] = render.threads;
  json doc = {{"splat_file", splat_file.string()},
              {"pose_file", pose_file.string()},
              {"output_dir", output_dir.string()},
              {"cameras", cameras_json(cameras)},
              {"render", r},
              {"detections",
               {{"original", original_detections.string()},
                {"renders", render_detections.string()},
                {"ground_truth", ground_truth.string()}}},
              {"ensemble", thresholds_json(thresholds, fusion)},
              {"grid",
               {{"group_iou", grid.group_iou},
                {"min_group_size", grid.min_group_size},
                {"purity_min", grid.purity_min},
                {"merge_iou", grid.merge_iou}}}};
  if (!grid.anchor_conf_min.empty()) doc["grid"]["anchor_conf_min"] = grid.anchor_conf_min;
  if (!grid.match_iou.empty()) doc["grid"]["match_iou"] = grid.match_iou;
  return doc.dump(2) + "\n";
}

void PipelineConfig::validate() const {
  if (!(cameras.radius > 0.0)) throw ConfigError("cameras.radius must be positive");
  if (cameras.per_view < 1) throw ConfigError("cameras.per_view must be >= 1");
  if (!(render.near > 0.0)) throw ConfigError("render.near must be positive");
  if (!(render.termination > 0.0 && render.termination < 1.0)) {
    throw ConfigError("render.termination must lie in (0, 1)");
  }
  if (render.tile_size < 1) throw ConfigError("render.tile_size must be >= 1");
  thresholds.validate();
  fusion.validate();
}

CameraPlan plan_cameras(std::vector<CameraView> originals, const CameraGeneration& gen) {
  CameraPlan plan;
  std::vector<PoseMatrix> poses;
  for (const CameraView& v : originals) poses.push_back(v.pose);
  plan.attention = solve_attention_center(poses);

  std::vector<std::vector<PoseMatrix>> per_view(originals.size());
  parallel_for(originals.size(), [&](std::size_t i) {
    const std::uint64_t seed = mix_seed(gen.seed, i);
    const PoseMatrix& pose = originals[i].pose;
    const Vec3& center = plan.attention.center;
    switch (gen.mode) {
      case GenerationMode::kCircularRandom:
        per_view[i] = gen_circular(pose, center, gen.radius, gen.per_view, CircleMode::kRandom, seed);
        break;
      case GenerationMode::kCircularEquidistant:
        per_view[i] =
            gen_circular(pose, center, gen.radius, gen.per_view, CircleMode::kEquidistant, seed);
        break;
      case GenerationMode::kSphericalRandom:
        per_view[i] = gen_spherical(pose, center, gen.radius, gen.per_view, SphereMode::kRandom, seed);
        break;
      case GenerationMode::kSphericalFibonacci:
        per_view[i] =
            gen_spherical(pose, center, gen.radius, gen.per_view, SphereMode::kFibonacci, seed);
        break;
    }
  });

  for (std::size_t i = 0; i < originals.size(); ++i) {
    CameraGroup group{originals[i].id, {}};
    for (std::size_t j = 0; j < per_view[i].size(); ++j) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "_g%03zu", j);
      CameraView v{originals[i].id + suffix, per_view[i][j], originals[i].intrinsics};
      group.generated_ids.push_back(v.id);
      plan.generated.push_back(std::move(v));
    }
    plan.groups.push_back(std::move(group));
  }
  plan.originals = std::move(originals);
  return plan;
}

void write_camera_artifacts(const CameraPlan& plan, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string(), out_dir.string());

  const AttentionSolution& a = plan.attention;
  json attention = {{"center", {a.center.x(), a.center.y(), a.center.z()}},
                    {"residual_rms", a.residual_rms},
                    {"line_params", a.line_params},
                    {"n_poses", plan.originals.size()},
                    {"n_generated", plan.generated.size()}};
  write_text(out_dir / "attention.json", attention.dump(1) + "\n");
  save_pose_file(out_dir / "generated_poses.json", plan.generated);

  json groups = json::array();
  for (const CameraGroup& g : plan.groups) {
    groups.push_back({{"source", g.source_id}, {"generated", g.generated_ids}});
  }
  write_text(out_dir / "camera_groups.json", groups.dump(1) + "\n");

  std::string csv = "kind,id,x,y,z,fx,fy,fz\n";
  auto row = [&](const char* kind, const std::string& id, const Vec3& p, const Vec3& f) {
    csv += std::string(kind) + "," + id;
    for (int k = 0; k < 3; ++k) csv += "," + fmt_double(p(k));
    for (int k = 0; k < 3; ++k) csv += "," + fmt_double(f(k));
    csv += "\n";
  };
  for (const CameraView& v : plan.originals) row("original", v.id, v.pose.position(), v.pose.forward());
  for (const CameraView& v : plan.generated) row("generated", v.id, v.pose.position(), v.pose.forward());
  row("center", "attention_center", a.center, Vec3::Zero());
  write_text(out_dir / "cameras.csv", csv);
}

CameraPlan solve_and_report_cameras(const fs::path& pose_file, const CameraGeneration& gen,
                                    const fs::path& out_dir) {
  CameraPlan plan = plan_cameras(load_pose_file(pose_file), gen);
  write_camera_artifacts(plan, out_dir);
  return plan;
}

std::vector<CameraGroup> load_camera_groups(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), static_cast<std::uint64_t>(e.byte));
  }
  std::vector<CameraGroup> groups;
  try {
    for (const json& entry : doc) {
      groups.push_back({entry.at("source").get<std::string>(),
                        entry.at("generated").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return groups;
}

EnsembleDataset load_ensemble_dataset(std::span<const CameraGroup> groups,
                                      const fs::path& original_dir, const fs::path& render_dir,
                                      const fs::path& ground_truth_dir) {
  std::vector<std::string> sources;
  std::vector<std::string> generated;
  for (const CameraGroup& g : groups) {
    sources.push_back(g.source_id);
    generated.insert(generated.end(), g.generated_ids.begin(), g.generated_ids.end());
  }
  const auto missing = missing_detection_files(render_dir, generated);
  if (!missing.empty()) {
    std::string listed;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) listed += ", ";
      if (i == 20) {
        listed += "... (" + std::to_string(missing.size() - 20) + " more)";
        break;
      }
      listed += missing[i];
    }
    throw MissingDetections(std::to_string(missing.size()) + " render views have no detection "
                                "file in " + render_dir.string() + ": " + listed +
                                ". Run the detector on the rendered images, write one "
                                "<view_id>.txt per view into that directory, then rerun.",
                            missing);
  }

  EnsembleDataset data;
  data.originals = load_view_detections(original_dir, sources);
  if (!ground_truth_dir.empty()) data.ground_truth = load_view_detections(ground_truth_dir, sources);
  for (const CameraGroup& g : groups) {
    data.renders.push_back(load_view_detections(render_dir, g.generated_ids));
  }
  return data;
}

std::vector<EnsembleResult> ensemble_dataset(const EnsembleDataset& data,
                                             const EnsembleThresholds& t,
                                             const FusionParams& params, int threads) {
  t.validate();
  params.validate();
  std::vector<EnsembleResult> results(data.originals.size());
  parallel_for(
      data.originals.size(),
      [&](std::size_t i) {
        results[i] = ensemble_view_detailed(data.originals[i], data.renders.at(i), t, params);
      },
      threads);
  return results;
}

std::string GridSearchResult::table_csv() const {
  std::string out =
      "group_iou,min_group_size,purity_min,merge_iou,anchor_conf_min,match_iou,map50,map50_95\n";
  for (const GridCell& c : table) {
    out += fmt_double(c.thresholds.group_iou) + "," + std::to_string(c.thresholds.min_group_size) +
           "," + fmt_double(c.thresholds.purity_min) + "," + fmt_double(c.thresholds.merge_iou) +
           "," + fmt_double(c.fusion.anchor_conf_min) + "," + fmt_double(c.fusion.match_iou) +
           "," + fmt_double(c.map50) + "," + fmt_double(c.map50_95) + "\n";
  }
  return out;
}

GridSearchResult grid_search(const GridRanges& grid, const FusionParams& params,
                             const EnsembleDataset& data, int threads) {
  if (grid.cell_count() == 0) throw ConfigError("grid search needs at least one value per threshold");
  params.validate();
  const std::vector<double> anchors =
      grid.anchor_conf_min.empty() ? std::vector<double>{params.anchor_conf_min} : grid.anchor_conf_min;
  const std::vector<double> matches =
      grid.match_iou.empty() ? std::vector<double>{params.match_iou} : grid.match_iou;
  GridSearchResult result;
  for (double g : grid.group_iou) {
    for (int m : grid.min_group_size) {
      for (double p : grid.purity_min) {
        for (double mi : grid.merge_iou) {
          for (double a : anchors) {
            for (double mt : matches) {
              GridCell cell;
              cell.thresholds = {g, m, p, mi};
              cell.thresholds.validate();
              cell.fusion = {a, mt};
              cell.fusion.validate();
              result.table.push_back(cell);
            }
          }
        }
      }
    }
  }
  parallel_for(
      result.table.size(),
      [&](std::size_t k) {
        GridCell& cell = result.table[k];
        std::vector<ViewDetections> corrected;
        for (EnsembleResult& r : ensemble_dataset(data, cell.thresholds, cell.fusion, 1)) {
          corrected.push_back(std::move(r.corrected));
        }
        const EvalReport report = evaluate(corrected, data.ground_truth);
        cell.map50 = report.map50;
        cell.map50_95 = report.map50_95;
      },
      threads);

  const GridCell* best = &result.table.front();
  for (const GridCell& c : result.table) {
    const EnsembleThresholds& t = c.thresholds;
    const EnsembleThresholds& b = best->thresholds;
    if (c.map50 > best->map50 ||
        (c.map50 == best->map50 &&
         (t.purity_min > b.purity_min ||
          (t.purity_min == b.purity_min && t.min_group_size < b.min_group_size)))) {
      best = &c;
    }
  }
  result.best = best->thresholds;
  result.best_fusion = best->fusion;
  result.best_map50 = best->map50;
  return result;
}

PipelineOutcome run_pipeline(const PipelineConfig& config) {
  config.validate();
  for (const auto& [name, path] :
       std::vector<std::pair<const char*, fs::path>>{{"splat_file", config.splat_file},
                                                     {"pose_file", config.pose_file},
                                                     {"detections.original",
                                                      config.original_detections},
                                                     {"detections.renders", config.render_detections},
                                                     {"detections.ground_truth",
                                                      config.ground_truth}}) {
    if (path.empty()) throw ConfigError(std::string("config is missing ") + name);
  }
  for (const fs::path& p : {config.splat_file, config.pose_file}) {
    if (!fs::exists(p)) throw IoError("input " + p.string() + " does not exist", p.string());
  }
  const fs::path& out = config.output_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string(), out.string());

  RunLedger ledger(out);
  PipelineOutcome outcome;

  // Stage 1: attention center and generated poses.
  const std::vector<std::string> camera_outputs = {
      "cameras/attention.json", "cameras/generated_poses.json", "cameras/camera_groups.json",
      "cameras/cameras.csv"};
  run_stage("cameras", [&] {
    const Fingerprints inputs = {{"pose_file", hash_file(config.pose_file)},
                                 {"settings", to_hex(fnv1a64(cameras_json(config.cameras).dump()))}};
    if (ledger.up_to_date("cameras", inputs)) {
      outcome.skipped_stages.push_back("cameras");
      return 0;
    }
    solve_and_report_cameras(config.pose_file, config.cameras, out / "cameras");
    ledger.record("cameras", inputs, ledger.output_fingerprints(camera_outputs));
    return 0;
  });

  // Stage 2: renders of every generated pose.
  run_stage("render", [&] {
    const Fingerprints inputs = {
        {"splat_file", hash_file(config.splat_file)},
        {"generated_poses", ledger.verified("cameras", "cameras/generated_poses.json")},
        {"settings", to_hex(fnv1a64(render_json(config.render).dump()))}};
    if (ledger.up_to_date("render", inputs)) {
      outcome.skipped_stages.push_back("render");
      return 0;
    }
    const auto views = load_pose_file(out / "cameras/generated_poses.json");
    const SplatCloud cloud = load_splat_ply(config.splat_file);
    const auto rendered = render_batch(cloud, views, config.render, out / "renders");
    std::vector<std::string> outputs = {std::string("renders/") + kRenderManifestName};
    for (const RenderedView& r : rendered) outputs.push_back("renders/" + r.file.filename().string());
    ledger.record("render", inputs, ledger.output_fingerprints(outputs));
    return 0;
  });

  // Stage 3: external detections for originals, renders and ground truth.
  const auto groups = run_stage("ingest", [&] {
    return load_camera_groups(out / "cameras/camera_groups.json");
  });
  std::vector<std::string> sources, generated;
  for (const CameraGroup& g : groups) {
    sources.push_back(g.source_id);
    generated.insert(generated.end(), g.generated_ids.begin(), g.generated_ids.end());
  }
  const EnsembleDataset data = run_stage("ingest", [&] {
    const Fingerprints inputs = {
        {"camera_groups", ledger.verified("cameras", "cameras/camera_groups.json")},
        {"original", detections_digest(config.original_detections, sources)},
        {"renders", detections_digest(config.render_detections, generated)},
        {"ground_truth", detections_digest(config.ground_truth, sources)}};
    EnsembleDataset d = load_ensemble_dataset(groups, config.original_detections,
                                              config.render_detections, config.ground_truth);
    ledger.record("ingest", inputs, {});
    return d;
  });

  // Stage 4: ensembling per original view.
  std::vector<std::string> ensemble_outputs;
  const auto corrected = run_stage("ensemble", [&] {
    const auto results = ensemble_dataset(data, config.thresholds, config.fusion,
                                          config.render.threads);
    std::vector<ViewDetections> views;
    for (const EnsembleResult& r : results) {
      const std::string stem = "ensemble/" + r.corrected.view_id;
      write_detection_file(out / (stem + ".txt"), r.corrected.detections);
      write_text(out / (stem + ".json"),
                 ensemble_sidecar_json(r, config.thresholds, config.fusion));
      ensemble_outputs.push_back(stem + ".txt");
      ensemble_outputs.push_back(stem + ".json");
      views.push_back(r.corrected);
    }
    Fingerprints inputs = {
        {"original", detections_digest(config.original_detections, sources)},
        {"renders", detections_digest(config.render_detections, generated)},
        {"settings", to_hex(fnv1a64(thresholds_json(config.thresholds, config.fusion).dump()))}};
    ledger.record("ensemble", inputs, ledger.output_fingerprints(ensemble_outputs));
    return views;
  });

  // Stage 5: evaluation of original and corrected detections.
  run_stage("eval", [&] {
    Fingerprints inputs = {{"ground_truth", detections_digest(config.ground_truth, sources)}};
    std::vector<ViewDetections> reloaded;
    for (const ViewDetections& v : corrected) {
      const std::string rel = "ensemble/" + v.view_id + ".txt";
      inputs[rel] = ledger.verified("ensemble", rel);
      reloaded.push_back({v.view_id, load_detection_file(out / rel)});
    }
    outcome.original = evaluate(data.originals, data.ground_truth);
    outcome.corrected = evaluate(reloaded, data.ground_truth);
    json report = {{"original", json::parse(outcome.original.to_json())},
                   {"corrected", json::parse(outcome.corrected.to_json())},
                   {"thresholds", thresholds_json(config.thresholds, config.fusion)}};
    outcome.report_file = out / "eval/report.json";
    write_text(outcome.report_file, report.dump(1) + "\n");
    write_text(out / "eval/table.csv",
               eval_csv({{"original", outcome.original}, {"corrected", outcome.corrected}}));
    ledger.record("eval", inputs, ledger.output_fingerprints({"eval/report.json", "eval/table.csv"}));
    return 0;
  });
  return outcome;
}

}  // namespace satsplat
