#include <benchmark/benchmark.h>

#include <cmath>

#include "satsplat/ensemble.hpp"
#include "satsplat/fixture.hpp"
#include "satsplat/geometry.hpp"
#include "satsplat/metrics.hpp"
#include "satsplat/pipeline.hpp"
#include "satsplat/random.hpp"
#include "satsplat/renderer.hpp"
#include "satsplat/scripted_detector.hpp"
#include "satsplat/synthetic.hpp"

using namespace satsplat;

namespace {

void BM_Render(benchmark::State& state) {
  const int size = static_cast<int>(state.range(1));
  const Intrinsics intr{double(size), double(size), size / 2.0, size / 2.0, size, size};
  const SplatCloud cloud = make_random_cloud(static_cast<std::size_t>(state.range(0)), 1.0, 4242);
  const PoseMatrix pose = look_at_pose(Vec3(0.5, -4, 1), Vec3::Zero(), Vec3(0, 0, 1));
  for (auto _ : state) benchmark::DoNotOptimize(render(cloud, pose, intr, RenderConfig{}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Render)->Args({1000, 256})->Args({10000, 256})->Args({10000, 512})
    ->Unit(benchmark::kMillisecond);

void BM_AttentionCenter(benchmark::State& state) {
  Rng rng(3);
  std::vector<PoseMatrix> poses;
  for (int i = 0; i < state.range(0); ++i) {
    const Vec3 c(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    poses.push_back(look_at_pose(c, Vec3(rng.normal(), rng.normal(), rng.normal()), Vec3(0, 0, 1)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_attention_center(poses));
}
BENCHMARK(BM_AttentionCenter)->Arg(8)->Arg(84)->Arg(256);

struct Scene {
  EnsembleDataset data;
};

Scene make_scene(int views, int per_view) {
  FixtureOptions options;
  options.views = views;
  const SyntheticSatellite sat = fixture_satellite(options);
  const auto originals = fixture_views(options);
  const CameraPlan plan =
      plan_cameras(originals, CameraGeneration{GenerationMode::kSphericalFibonacci, 0.1, per_view, 5});
  Scene s;
  const auto truth = scripted_detect_all(sat, originals, ScriptedDetectorConfig{});
  s.data.ground_truth = truth;
  s.data.originals = scripted_detect_all(sat, originals, options.original);
  for (std::size_t i = 0; i < originals.size(); ++i) {
    std::vector<CameraView> group(plan.generated.begin() + i * per_view,
                                  plan.generated.begin() + (i + 1) * per_view);
    s.data.renders.push_back(scripted_detect_all(sat, group, options.render));
  }
  return s;
}

void BM_EnsembleDataset(benchmark::State& state) {
  const Scene s = make_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble_dataset(s.data, EnsembleThresholds{}, FusionParams{}, 1));
  }
}
BENCHMARK(BM_EnsembleDataset)->Args({12, 16})->Args({84, 64})->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const Scene s = make_scene(static_cast<int>(state.range(0)), 16);
  const auto thresholds = coco_iou_thresholds();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(s.data.originals, s.data.ground_truth, thresholds));
}
BENCHMARK(BM_Evaluate)->Arg(12)->Arg(84);

void BM_GridSearch(benchmark::State& state) {
  const Scene s = make_scene(12, 16);
  for (auto _ : state) benchmark::DoNotOptimize(grid_search(GridRanges{}, FusionParams{}, s.data, 1));
}
BENCHMARK(BM_GridSearch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
