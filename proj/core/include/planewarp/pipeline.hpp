#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planewarp/geometry.hpp"
#include "planewarp/grad.hpp"
#include "planewarp/image.hpp"
#include "planewarp/manifest.hpp"
#include "planewarp/segmentation.hpp"
#include "planewarp/selection.hpp"
#include "planewarp/warp.hpp"

namespace planewarp {

enum class SelectionMode { Hard, Soft };

struct RunConfig {
  int m = 16;
  int n_superpixels = 400;
  double compactness = kDefaultCompactness;
  double epsilon = kDefaultMaskEpsilon;
  SelectionMode selection = SelectionMode::Hard;
  double temperature = 0.05;
  double beta = 0.25;
  int refine_steps = 200;
  double refine_lr = 0.01;
  double huber_delta = 1e-3;
  std::uint64_t seed = 0;
  double depth_scale = 1000.0;
  GeometryTolerances tol;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;

  /// Sets one field from its manifest key. Returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);

  /// Writes every field into the manifest's [config] section.
  void describe(Manifest& manifest) const;

  /// Reads keys from the [config] section (or top-level keys) of a
  /// key=value file; unknown keys are rejected.
  static RunConfig load(const std::string& path, RunConfig base);
  static RunConfig load(const std::string& path);
};

std::string to_string(SelectionMode mode);

struct PipelineInputs {
  Image source;
  DepthMap depth;
  NormalMap normals;
  Intrinsics K;
  Pose relative;
  std::optional<Image> target;
  std::optional<Mask> target_valid;
  /// Bypasses SLIC + k-means when set.
  std::optional<SeedRegions> seeds;
};

struct RegionOutcome {
  std::optional<PlaneEstimate> estimate;  ///< empty when the region was downgraded
  Eigen::Matrix3d H_inv = Eigen::Matrix3d::Identity();
  std::string warning;
};

struct PipelineResult {
  Image synthesized;  ///< after hole filling
  Image composite;    ///< before hole filling
  SeedRegions seeds;
  SelectionMaps selection;
  CandidateSet candidates;
  std::vector<RegionOutcome> regions;
  double hole_fraction = 0.0;
  std::optional<double> mean_l1;

  std::vector<std::string> warnings() const;
};

/// segmentation -> plane pooling -> homographies -> selection -> warps ->
/// compositing -> hole filling. Regions whose plane or homography is
/// degenerate fall back to the identity homography with a warning.
PipelineResult run_pipeline(const RunConfig& config, const PipelineInputs& inputs);

/// Seed regions from SLIC + k-means with the configured counts and seed.
SeedRegions segment(const RunConfig& config, const Image& image);

/// Problem for plane refinement built from a pipeline run.
SynthesisProblem make_problem(const RunConfig& config, const PipelineInputs& inputs,
                              const PipelineResult& result, const Image& target,
                              const Mask& valid);

/// Adds tool, config, per-region warnings and metrics to `manifest`.
void describe_run(Manifest& manifest, const RunConfig& config, const PipelineResult& result);

}  // namespace planewarp
