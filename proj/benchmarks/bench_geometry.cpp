#include <benchmark/benchmark.h>

#include <random>

#include <Eigen/Geometry>

#include "planewarp/geometry.hpp"

namespace pw = planewarp;

static void BM_InvertHomography(benchmark::State& state) {
  const pw::Intrinsics K{200, 200, 111.5, 111.5};
  pw::Pose pose;
  pose.R = Eigen::AngleAxisd(0.1, Eigen::Vector3d(0.3, 1, 0.2).normalized()).toRotationMatrix();
  pose.t = {0.3, -0.1, 0.2};
  pw::Plane plane;
  plane.normal = Eigen::Vector3d(0.1, -0.2, -1).normalized();
  plane.offset = 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(pw::invert_homography(K, pose, plane));
}
BENCHMARK(BM_InvertHomography);

static void BM_ApplyHomography(benchmark::State& state) {
  Eigen::Matrix3d H;
  H << 1.01, 0.02, 3, -0.01, 0.99, -2, 1e-4, 2e-4, 1;
  double x = 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pw::apply_homography(H, {x, 20.0}));
    x += 1e-3;
  }
}
BENCHMARK(BM_ApplyHomography);
