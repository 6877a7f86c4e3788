#include <benchmark/benchmark.h>
#include <glog/logging.h>

#include "gsfm/bundle_adjustment.h"
#include "gsfm/global_positioning.h"
#include "gsfm/pipeline.h"
#include "gsfm/rotation_averaging.h"
#include "gsfm/synthetic.h"
#include "test_helpers.h"

namespace gsfm {
namespace {

SyntheticDataset Scene(int cameras, int points, double noise) {
  SyntheticSceneOptions options;
  options.num_cameras = cameras;
  options.num_points = points;
  options.noise_px = noise;
  options.seed = 1;
  return GenerateScene(options);
}

std::vector<Track> TrackList(const Reconstruction& recon) {
  std::vector<Track> tracks;
  for (const auto& [id, track] : recon.tracks) tracks.push_back(track);
  return tracks;
}

void BM_RotationAveraging(benchmark::State& state) {
  const auto ring = testing::MakeRotationRing(static_cast<int>(state.range(0)), 4, 0.1,
                                              DegToRad(1.0), 3);
  const auto initial = InitSpanningTree(ring.problem);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveRotationAveraging(ring.problem, initial));
  }
}
BENCHMARK(BM_RotationAveraging)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GlobalPositioning(benchmark::State& state) {
  const auto data = Scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1.0);
  const PositioningProblem problem =
      BuildPositioningProblem(testing::Rotations(data.scene.ground_truth),
                              TrackList(data.scene.ground_truth), data.graph);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolvePositioning(problem));
  }
}
BENCHMARK(BM_GlobalPositioning)->Args({20, 200})->Args({50, 500})->Unit(benchmark::kMillisecond);

void BM_BundleAdjustment(benchmark::State& state) {
  const auto data = Scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1.0);
  Reconstruction start = data.scene.ground_truth;
  for (auto& [id, camera] : start.cameras) camera = data.graph.Cameras().at(id);
  for (auto _ : state) {
    Reconstruction recon = start;
    benchmark::DoNotOptimize(RunGlobalBa(&recon, BaConfig{}));
  }
}
BENCHMARK(BM_BundleAdjustment)->Args({20, 200})->Args({50, 500})->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const auto data = Scene(static_cast<int>(state.range(0)), 300, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RunPipeline(data.graph, PipelineConfig{}));
  }
}
BENCHMARK(BM_Pipeline)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace gsfm

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_minloglevel = 2;
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
