#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "planewarp/segmentation.hpp"

namespace pw = planewarp;

static void BM_Slic(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const pw::Image image = pw::render(bench::scene(size), pw::Pose::identity()).image;
  for (auto _ : state) benchmark::DoNotOptimize(pw::slic_segment(image, 400));
}
BENCHMARK(BM_Slic)->Arg(224)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ClusterRegions(benchmark::State& state) {
  const pw::Image image = pw::render(bench::scene(224), pw::Pose::identity()).image;
  const pw::SuperpixelLabeling labeling = pw::slic_segment(image, 400);
  for (auto _ : state) benchmark::DoNotOptimize(pw::cluster_regions(labeling, image, 16, 0));
}
BENCHMARK(BM_ClusterRegions)->Unit(benchmark::kMicrosecond);
