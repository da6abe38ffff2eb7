#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "planewarp/grad.hpp"

namespace pw = planewarp;

static void BM_SynthGradient(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const pw::PlanarScene s = bench::scene(size);
  const pw::ScenePair pair = pw::make_pair(s, s.source_pose, s.target_pose);
  const pw::ViewRegions vr = pw::seed_regions_from_view(pair.source);
  pw::SynthesisProblem problem;
  problem.source = pair.source.image;
  problem.selection = pw::hard_selection(vr.regions);
  problem.K = s.K;
  problem.pose = pair.relative;
  problem.target = pair.target.image;
  problem.valid = pw::covisibility(pair, s.K);
  std::vector<pw::PlaneEstimate> estimates;
  for (int j = 0; j < vr.regions.count(); ++j) {
    estimates.push_back(pw::pool_plane(vr.regions.mask(j), pair.source.normals, pair.source.depth, s.K));
  }
  const pw::PlaneParams params = pw::params_from_estimates(estimates);
  for (auto _ : state) benchmark::DoNotOptimize(pw::synth_gradient(problem, params));
}
BENCHMARK(BM_SynthGradient)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);
