#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "planewarp/pipeline.hpp"
#include "planewarp/warp.hpp"

namespace pw = planewarp;

static void BM_WarpImage(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const pw::RenderedView view = pw::render(bench::scene(size), pw::Pose::identity());
  Eigen::Matrix3d H_inv;
  H_inv << 0.98, 0.01, 2.5, -0.01, 1.01, -1.5, 1e-4, -5e-5, 1;
  for (auto _ : state) benchmark::DoNotOptimize(pw::warp_image(view.image, H_inv, size, size));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_WarpImage)->Arg(224)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_Pipeline(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const pw::PlanarScene s = bench::scene(size);
  const pw::ScenePair pair = pw::make_pair(s, s.source_pose, s.target_pose);
  pw::PipelineInputs in;
  in.source = pair.source.image;
  in.depth = pair.source.depth;
  in.normals = pair.source.normals;
  in.K = s.K;
  in.relative = pair.relative;
  const pw::RunConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(pw::run_pipeline(config, in));
}
BENCHMARK(BM_Pipeline)->Arg(224)->Unit(benchmark::kMillisecond);
