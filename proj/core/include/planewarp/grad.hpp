#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "planewarp/geometry.hpp"
#include "planewarp/image.hpp"
#include "planewarp/selection.hpp"
#include "planewarp/warp.hpp"

namespace planewarp {

/// Mean over valid pixels and channels of |pred - target|. Throws NoValidPixels.
double loss_l1(const Image& pred, const Image& target, const Mask& valid);
double loss_l1(const Image& pred, const Image& target);

/// Optimizable geometry of one region: depth at the (fixed) region center
/// and the plane normal.
struct RegionPlane {
  double depth = 1.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
};

struct PlaneParams {
  std::vector<RegionPlane> regions;
};

PlaneParams params_from_estimates(std::span<const PlaneEstimate> estimates);

/// Everything the synthesized view depends on apart from the plane parameters.
struct SynthesisProblem {
  Image source;
  SelectionMaps selection;
  Intrinsics K;
  Pose pose;
  Image target;
  Mask valid;  ///< Pixels of the target that enter the loss.
  double epsilon = kDefaultMaskEpsilon;
  double huber_delta = 1e-3;
  GeometryTolerances tol;
};

/// Inverse homographies for the given parameters. Normals are normalized first.
std::vector<Eigen::Matrix3d> inverse_homographies(const SynthesisProblem& problem,
                                                  const PlaneParams& params);

/// Clamped composite before hole filling.
Image synthesize(const SynthesisProblem& problem, const PlaneParams& params);

struct RegionGradient {
  double depth = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();  ///< tangent to the unit sphere
};

struct GradientResult {
  double surrogate_loss = 0.0;  ///< Huberized objective the gradient belongs to.
  double l1_loss = 0.0;         ///< Exact mean ℓ1 of the same composite.
  std::vector<RegionGradient> regions;
};

/// Loss and its analytic gradient with respect to each region's depth and
/// normal, chained through compositing, bilinear sampling, the closed-form
/// inverse homography and the plane construction.
GradientResult synth_gradient(const SynthesisProblem& problem, const PlaneParams& params);

/// Surrogate objective only (same value as synth_gradient().surrogate_loss).
double surrogate_objective(const SynthesisProblem& problem, const PlaneParams& params);

struct GradCheckEntry {
  int region = 0;
  int component = 0;  ///< 0 = depth, 1..3 = normal x, y, z
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  double fraction_below(double tol) const;
};

/// |a - f| / max(|a|, |f|, 1e-8).
double relative_error(double analytic, double numeric);

/// Central differences with step step_scale × parameter magnitude (the depth
/// for depth entries, the unit normal's length for normal entries).
GradReport check_gradient(const SynthesisProblem& problem, const PlaneParams& params,
                          double step_scale = 1e-5);

struct RefineOptions {
  int steps = 200;
  double lr = 0.01;     ///< Fraction of the initial depth (depths) or radians (normals).
  double beta1 = 0.9;
  double beta2 = 0.999;
  bool refine_normals = true;
};

struct TraceEntry {
  int step = 0;
  double loss = 0.0;  ///< exact ℓ1
  std::vector<double> depths;
  std::vector<Eigen::Vector3d> normals;
};

struct RefineResult {
  PlaneParams best;
  double best_loss = 0.0;
  std::vector<TraceEntry> trace;
};

/// Descends the surrogate objective from `init` and returns the parameters
/// with the lowest exact ℓ1 seen. Normals stay unit length after each step.
RefineResult refine_planes(const SynthesisProblem& problem, const PlaneParams& init,
                           const RefineOptions& options = {});

/// "step,loss,depth_0,...,depth_{m-1}" rows.
void write_loss_trace_csv(std::ostream& out, std::span<const TraceEntry> trace);

}  // namespace planewarp
